use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::design::{build_design, Dataset, DesignModel};
use crate::formula::{expand_terms, parse_model, resolve_aliases};

pub fn dataset(y: Vec<f64>, columns: Vec<(&str, Vec<String>)>) -> Dataset {
    Dataset::from_labels(y, columns.into_iter().map(|(n, v)| (n.to_string(), v)).collect()).unwrap()
}

pub fn design_for(formula: &str, data: &Dataset) -> DesignModel {
    let spec = parse_model(formula).unwrap();
    let names = data.factor_names();
    let defs = expand_terms(&spec, &names).unwrap();
    let aliases = resolve_aliases(&spec, &names).unwrap();
    build_design(&defs, data, &aliases).unwrap()
}

/// Groups A:(1,3), B:(5,7), C:(9,11).
pub fn one_way() -> (Dataset, DesignModel) {
    let y = alloc::vec![1.0, 3.0, 5.0, 7.0, 9.0, 11.0];
    let g = ["A", "A", "B", "B", "C", "C"].iter().map(|s| s.to_string()).collect();
    let data = dataset(y, alloc::vec![("g", g)]);
    let design = design_for("y ~ g", &data);
    (data, design)
}

/// 5×5 Latin square of whole-plot treatments, each plot split in two.
pub fn split_plot(y: Vec<f64>) -> (Dataset, DesignModel) {
    let (mut row, mut col, mut trt, mut sub) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for r in 0..5 {
        for c in 0..5 {
            for s in 0..2 {
                row.push(format!("r{r}"));
                col.push(format!("c{c}"));
                trt.push(["A", "B", "C", "D", "E"][(r + c) % 5].to_string());
                sub.push(format!("{}", s + 1));
            }
        }
    }
    let data = dataset(y, alloc::vec![("row", row), ("col", col), ("trt", trt), ("sub", sub)]);
    let design = design_for(
        "y ~ row + col + trt + row:col + sub + row:sub + col:sub + trt:sub + row:col:sub",
        &data,
    );
    (data, design)
}

/// Balanced one-way layout with `groups × reps` observations.
pub fn balanced_one_way(y: Vec<f64>, groups: usize, reps: usize) -> (Dataset, DesignModel) {
    assert_eq!(y.len(), groups * reps);
    let g = (0..groups * reps).map(|i| format!("g{}", i / reps)).collect();
    let data = dataset(y, alloc::vec![("g", g)]);
    let design = design_for("y ~ g", &data);
    (data, design)
}
