//! Frozen tables shared by the regression and acceptance targets.
#![allow(dead_code)]

pub const S48_TABLE: &[(&str, &[&str])] = &[
    ("11", &["53", "62"]),
    ("12", &["32", "73"]),
    ("13", &["41"]),
    ("21", &["52", "62"]),
    ("22", &["32", "81"]),
    ("23", &["71"]),
    ("31", &["12", "51"]),
    ("32", &["12", "41"]),
    ("33", &["82"]),
    ("41", &["13", "32"]),
    ("42", &["13", "81"]),
    ("43", &["81"]),
    ("51", &["31", "72"]),
    ("52", &["21", "83"]),
    ("53", &["11"]),
    ("61", &["51", "83"]),
    ("62", &["11", "21"]),
    ("63", &["72"]),
    ("71", &["23", "82"]),
    ("72", &["51", "63"]),
    ("73", &["12"]),
    ("81", &["42", "43"]),
    ("82", &["11", "33"]),
    ("83", &["61"]),
];

pub const U4_TABLE: &[(&str, &[&str])] = &[
    ("11", &["12", "23", "41", "44"]),
    ("12", &["33", "63", "82"]),
    ("13", &["22", "31"]),
    ("14", &["42", "72"]),
    ("21", &["22", "33", "51", "54"]),
    ("22", &["13", "43", "71"]),
    ("23", &["11", "32"]),
    ("24", &["52", "92"]),
    ("31", &["13", "42", "53", "64"]),
    ("32", &["23", "53", "91"]),
    ("33", &["12", "21"]),
    ("34", &["62", "81"]),
    ("41", &["11", "71"]),
    ("42", &["14", "61"]),
    ("43", &["22"]),
    ("44", &["11"]),
    ("51", &["32", "62"]),
    ("52", &["11", "24"]),
    ("53", &["32"]),
    ("54", &["21"]),
    ("61", &["12", "42"]),
    ("62", &["34", "51"]),
    ("63", &["12"]),
    ("64", &["31"]),
    ("71", &["41"]),
    ("72", &["14"]),
    ("81", &["34"]),
    ("82", &["12"]),
    ("91", &["51"]),
    ("92", &["24"]),
];

pub const U4_GROUPS: &[&[&str]] = &[
    &["12", "21", "31", "33", "34", "61", "62", "64", "81", "82"],
    &["11", "13", "42", "51", "54", "63"],
    &["14", "22", "23", "32", "41", "44", "52", "91"],
    &["24", "43", "53", "71", "72"],
    &["92"],
];

/// (subset, member of the previous group inside its PI family)
pub const U4_LINKS: &[(&str, &str)] = &[
    ("11", "12"),
    ("13", "31"),
    ("42", "61"),
    ("51", "62"),
    ("54", "21"),
    ("63", "12"),
    ("14", "42"),
    ("22", "13"),
    ("23", "11"),
    ("41", "11"),
    ("44", "11"),
    ("52", "11"),
    ("91", "51"),
    ("24", "52"),
    ("43", "22"),
    ("53", "32"),
    ("71", "41"),
    ("72", "14"),
    ("92", "24"),
];
