//! The CLI golden suite, shared by the golden tests and the acceptance runner.

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

pub fn fixture(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    root.join(name).to_string_lossy().into_owned()
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.json"))
}

pub fn cexp(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cexp"))
        .args(args)
        .output()
        .expect("cexp binary runs")
}

pub fn with_workers(args: &[String], workers: usize) -> Vec<String> {
    let mut v = args.to_vec();
    v.push("--workers".into());
    v.push(workers.to_string());
    v
}

pub struct Case {
    pub name: &'static str,
    pub args: Vec<String>,
}

/// Concatenates argument groups; `@name` expands to a file under `fixtures/`.
fn case(name: &'static str, groups: &[&[&str]]) -> Case {
    let args = groups
        .iter()
        .flat_map(|g| g.iter())
        .map(|w| match w.strip_prefix('@') {
            Some(f) => fixture(f),
            None => w.to_string(),
        })
        .collect();
    Case { name, args }
}

const QUBIT: &[&str] = &["--ham", "@single_qubit.json", "--state", "@plus_y.json"];
const LATTICE: &[&str] = &["--ham", "@square_lattice_3x3.json", "--state", "@neel_3x3.json"];

pub fn golden_cases() -> Vec<Case> {
    vec![
        case("observable", &[&["observable"], QUBIT, &["--obs", "@z0.json", "--time", "0.02", "--order", "8"]]),
        case(
            "observable_continued",
            &[
                &["observable"],
                QUBIT,
                &["--obs", "@z0.json", "--time", "0.25", "--mode", "continued", "--epsilon", "1e-3"],
            ],
        ),
        case("loschmidt", &[&["loschmidt"], QUBIT, &["--time", "0.01", "--order", "8"]]),
        case("loschmidt_order0", &[&["loschmidt"], QUBIT, &["--time", "0.01", "--order", "0"]]),
        case("loschmidt_imaginary", &[&["loschmidt"], QUBIT, &["--time", "0.01", "--imaginary", "--order", "8"]]),
        case(
            "multi_loschmidt",
            &[&[
                "multi-loschmidt", "--ham", "@single_qubit.json", "--time", "0.005", "--ham", "@single_qubit.json",
                "--time", "0.005", "--state", "@plus_y.json", "--order", "8",
            ]],
        ),
        case("exact_observable", &[&["exact", "--what", "observable"], QUBIT, &["--obs", "@z0.json", "--time", "0.25"]]),
        case("exact_loschmidt", &[&["exact", "--what", "loschmidt"], QUBIT, &["--time", "0.01"]]),
        case("exact_distribution", &[&["exact", "--what", "distribution"], QUBIT]),
        case("concentration", &[&["concentration", "--ham", "@single_qubit.json", "--delta", "1"]]),
        case(
            "concentration_evolved",
            &[&["concentration", "--ham", "@single_qubit.json", "--delta", "1", "--variant", "evolved", "--time", "0.004"]],
        ),
        case("qsl", &[&["qsl"], QUBIT, &["--time", "0.01"]]),
        case("thresholds", &[&["thresholds", "--ham", "@single_qubit.json"]]),
        case("dpt_scan", &[&["dpt-scan"], QUBIT, &["--points", "5"]]),
        case(
            "lattice_observable",
            &[&["observable"], LATTICE, &["--obs", "@z_center.json", "--time", "0.012", "--order", "5"]],
        ),
        case("lattice_loschmidt", &[&["loschmidt"], LATTICE, &["--time", "0.001", "--order", "5"]]),
        case("lattice_dpt_scan", &[&["dpt-scan"], LATTICE, &["--order", "4", "--points", "4"]]),
    ]
}
