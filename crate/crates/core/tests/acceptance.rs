//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p delaywave-core --test acceptance -- --nocapture`.

use std::sync::OnceLock;

use delaywave_core::diagnostics::EnergyTrace;
use delaywave_core::model::ModelParams;
use delaywave_core::verify::{self, CriterionReport};
use delaywave_core::Result;

fn params() -> ModelParams {
    ModelParams::default()
}

fn reference() -> &'static Result<EnergyTrace> {
    static TRACE: OnceLock<Result<EnergyTrace>> = OnceLock::new();
    TRACE.get_or_init(|| verify::reference_trace(&params()))
}

fn gate(r: CriterionReport) {
    println!("{}", r.line());
    assert!(
        r.pass,
        "{}\n{}",
        r.line(),
        serde_json::to_string_pretty(&r.metrics).unwrap()
    );
}

#[test]
fn criterion_1_matrix_dissipativity() {
    gate(verify::criterion_dissipativity(&params(), 200));
}

#[test]
fn criterion_2_energy_monotonicity() {
    gate(verify::criterion_energy_monotone(reference()));
}

#[test]
fn criterion_3_trivial_kernel() {
    gate(verify::criterion_trivial_kernel(&params()));
}

#[test]
fn criterion_4_imaginary_axis_gap() {
    gate(verify::criterion_axis_gap(&params()));
}

#[test]
fn criterion_5_resolvent_growth() {
    gate(verify::criterion_resolvent_growth(&params()));
}

#[test]
fn criterion_6_polynomial_decay() {
    gate(verify::criterion_polynomial_decay(&params(), reference()));
}

#[test]
fn criterion_7_reformulation_equivalence() {
    gate(verify::criterion_reformulation(&params()));
}

#[test]
fn criterion_8_discretization_convergence() {
    gate(verify::criterion_convergence(&params()));
}
