//! Published case-study outputs and their highlighted matches, as plain data.
#![allow(dead_code)]

pub const TRUE_LABELS_A: &str = "1. tinnitus
1. whipple procedure
2. insulin-dependent diabetic
2. simvastatin
2. retinopathy
2. microalbumin
3. colon adenomas
3. colonoscopy";

pub const ZERO_SHOT_A: &str = "1. history of pancreatic neoplasm
1. contrast ct of the abdomen and pelvis
1. ca-19-9 blood test
2. diabetes
2. a1c blood test
2. microalbuminuria urine test
3. dyslipidemia
3. lipid profile blood test
3. lfts (liver function tests) blood test";

pub const FEW_SHOT_A: &str = "1. tinnitus
2. low-grade pancreatic neoplasm
2. whipple procedure with pancreatectomy and splenectomy
2. bile duct stricture requiring reconstruction
3. insulin-dependent diabetes
3. insulin pump
3. retinopathy";

pub const TRUE_LABELS_B: &str = "1. tinnitus
1. whipple procedure
2. insulin-dependent diabetic
2. simvastatin
2. retinopathy
2. microalbumin
3. colon adenomas
3. colonoscopy
4. gerd
4. omeprazole
5. erectile dysfunction
5. viagra";

pub const FINETUNED_B: &str = "1. tinnitus of many years' duration.
2. low-grade pancreatic neoplasm.
3. insulin-dependent diabetes.
4. Dyslipidemia.
5. history of high blood pressure.
6. family history of brca gene.
7. multiple colon adenomas by colonoscopy.
8. sleep apnea.
9. Gerd.
10. erectile dysfunction.";

/// Highlighted (model output, gold term) pairs from the three case studies.
pub const HIGHLIGHTED: &[(&str, &str)] = &[
    ("diabetes", "insulin-dependent diabetic"),
    ("tinnitus", "tinnitus"),
    ("whipple procedure with pancreatectomy and splenectomy", "whipple procedure"),
    ("insulin-dependent diabetes", "insulin-dependent diabetic"),
    ("retinopathy", "retinopathy"),
    ("tinnitus of many years' duration.", "tinnitus"),
    ("insulin-dependent diabetes.", "insulin-dependent diabetic"),
    ("multiple colon adenomas by colonoscopy.", "colon adenomas"),
    ("Gerd.", "gerd"),
    ("nonischemic cardiomyopathy", "nonischemic cardiomyopathy"),
    ("persantine thallium", "persantine thallium"),
    ("gerd", "gerd"),
    ("heart catheterization", "heart catheterization"),
];

/// Model outputs that were not highlighted, with the visible gold list they
/// were displayed against.
pub fn unhighlighted() -> Vec<(&'static str, &'static str)> {
    let labels_c = "1. nonischemic cardiomyopathy
1. persantine thallium
1. ejection fraction
1. lad ischemia
1. heart catheterization
1. carvedilol
2. trigger fingers
2. hand clinic
2. mri
5. gerd";
    let mut out = Vec::new();
    for t in [
        "history of pancreatic neoplasm",
        "contrast ct of the abdomen and pelvis",
        "ca-19-9 blood test",
        "a1c blood test",
        "microalbuminuria urine test",
        "dyslipidemia",
        "lipid profile blood test",
        "lfts (liver function tests) blood test",
        "low-grade pancreatic neoplasm",
        "bile duct stricture requiring reconstruction",
        "insulin pump",
    ] {
        out.push((t, TRUE_LABELS_A));
    }
    for t in [
        "audiometry.",
        "ct scan of the temporal bone.",
        "ct scan of the abdomen and pelvis.",
        "endoscopic ultrasound.",
        "fasting blood glucose.",
        "hba1c.",
        "c-peptide.",
        "history of high blood pressure.",
        "family history of brca gene.",
        "sleep apnea.",
    ] {
        out.push((t, TRUE_LABELS_B));
    }
    for t in [
        "echocardiogram",
        "egd",
        "fatty liver",
        "hemochromatosis gene analysis",
        "sinus polyposis",
        "asthma",
        "hives",
        "chest x-rays",
        "iron saturation",
        "echo",
    ] {
        out.push((t, labels_c));
    }
    out
}

/// Gold terms from different case studies that must stay apart.
pub const CROSS_PAIRS: &[(&str, &str)] = &[
    ("simvastatin", "carvedilol"),
    ("colonoscopy", "heart catheterization"),
    ("omeprazole", "persantine thallium"),
    ("erectile dysfunction", "trigger fingers"),
    ("retinopathy", "lad ischemia"),
    ("microalbumin", "ejection fraction"),
];
