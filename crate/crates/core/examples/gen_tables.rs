//! Regenerates `src/ardl/tables.rs` from Monte-Carlo simulation.
//!
//! Usage:
//!   cargo run --release -p replyscope-core --example gen_tables > /tmp/tables.rs
//!   mv /tmp/tables.rs crates/core/src/ardl/tables.rs
//!
//! The unit-root grid holds quantiles of the test statistic on 1,000
//! regression rows; the bounds tables hold the 10%/5%/1% stationary and
//! integrated driver bounds for zero to three drivers, both test cases.

use std::fmt::Write;

use replyscope_core::ardl::{AdfVariant, BoundsCase};
use replyscope_core::synth::{mc_bounds_critical_values, mc_null_quantiles};

const ADF_PROBS: [f64; 25] = [
    0.001, 0.005, 0.01, 0.02, 0.025, 0.04, 0.05, 0.06, 0.08, 0.10, 0.125, 0.15, 0.20, 0.25,
    0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 0.95, 0.975, 0.99, 0.999,
];
// 1,001 observations give 1,000 rows with zero augmentation lags.
const ADF_N: usize = 1001;
const ADF_REPS: usize = 200_000;
const BOUNDS_N: usize = 1000;
const BOUNDS_REPS: usize = 50_000;

fn array_body(vals: &[f64]) -> String {
    let mut out = String::new();
    for chunk in vals.chunks(5) {
        out.push_str("   ");
        for v in chunk {
            write!(out, " {v:?},").unwrap();
        }
        out.push('\n');
    }
    out
}

fn bounds_table(case: BoundsCase, seed_base: u64) -> String {
    let mut out = String::new();
    for k in 0..=3 {
        let (f, t) =
            mc_bounds_critical_values(case, k, BOUNDS_N, BOUNDS_REPS, seed_base + k as u64)
                .expect("bounds tabulation");
        out.push_str("    [\n");
        for i in 0..3 {
            writeln!(
                out,
                "        ({:?}, {:?}, {:?}, {:?}),",
                f[i].lower, f[i].upper, t[i].lower, t[i].upper
            )
            .unwrap();
        }
        out.push_str("    ],\n");
    }
    out
}

fn main() {
    let grid_c = mc_null_quantiles(AdfVariant::Constant, ADF_N, ADF_REPS, &ADF_PROBS, 11)
        .expect("constant grid");
    let grid_ct = mc_null_quantiles(AdfVariant::ConstantTrend, ADF_N, ADF_REPS, &ADF_PROBS, 12)
        .expect("trend grid");

    let mut f = String::new();
    f.push_str(
        "//! Simulated null-distribution tables for the unit-root p-value and the\n\
         //! bounds test. Generated output: regenerate with\n\
         //! `cargo run --release -p replyscope-core --example gen_tables`.\n\
         //!\n",
    );
    writeln!(
        f,
        "//! Unit-root grid: {ADF_REPS} random walks, {} regression rows.\n\
         //! Bounds tables: {BOUNDS_REPS} replications per driver case, {} rows.",
        ADF_N - 1,
        BOUNDS_N - 1
    )
    .unwrap();
    f.push_str(
        "\nuse super::bounds::{BoundsBand, BoundsCase};\n\
         use super::unit_root::AdfVariant;\n\
         use crate::error::{CoreError, Result};\n\n",
    );

    writeln!(f, "pub(crate) const ADF_TAIL_PROBS: [f64; {}] = [", ADF_PROBS.len()).unwrap();
    f.push_str(&array_body(&ADF_PROBS));
    f.push_str("];\n");
    writeln!(f, "pub(crate) const ADF_QUANTILES_CONSTANT: [f64; {}] = [", ADF_PROBS.len())
        .unwrap();
    f.push_str(&array_body(&grid_c));
    f.push_str("];\n");
    writeln!(f, "pub(crate) const ADF_QUANTILES_TREND: [f64; {}] = [", ADF_PROBS.len()).unwrap();
    f.push_str(&array_body(&grid_ct));
    f.push_str("];\n\n");

    f.push_str(
        "/// Upper-level rows ordered 10%, 5%, 1%; index by k = number of\n\
         /// independent series (0..=3). Values are (f_lower, f_upper, t_lower,\n\
         /// t_upper) with lower meaning numerically smaller.\n\
         type Row = (f64, f64, f64, f64);\n",
    );
    f.push_str("pub(crate) const BOUNDS_CONSTANT: [[Row; 3]; 4] = [\n");
    f.push_str(&bounds_table(BoundsCase::UnrestrictedConstant, 300));
    f.push_str("];\n");
    f.push_str("pub(crate) const BOUNDS_TREND: [[Row; 3]; 4] = [\n");
    f.push_str(&bounds_table(BoundsCase::UnrestrictedConstantTrend, 400));
    f.push_str("];\n\n");

    f.push_str(
        "/// P(T <= stat) under the unit-root null, by linear interpolation on the\n\
         /// simulated quantile grid; clamped to the grid ends in the far tails.\n\
         pub(crate) fn adf_p_value(variant: AdfVariant, stat: f64) -> f64 {\n\
         \x20   let q: &[f64] = match variant {\n\
         \x20       AdfVariant::Constant => &ADF_QUANTILES_CONSTANT,\n\
         \x20       AdfVariant::ConstantTrend => &ADF_QUANTILES_TREND,\n\
         \x20   };\n\
         \x20   let p = &ADF_TAIL_PROBS;\n\
         \x20   if stat <= q[0] {\n\
         \x20       return p[0];\n\
         \x20   }\n\
         \x20   if stat >= q[q.len() - 1] {\n\
         \x20       return p[p.len() - 1];\n\
         \x20   }\n\
         \x20   let i = q.partition_point(|v| *v < stat);\n\
         \x20   let w = (stat - q[i - 1]) / (q[i] - q[i - 1]);\n\
         \x20   p[i - 1] + w * (p[i] - p[i - 1])\n\
         }\n\n",
    );

    f.push_str(
        "/// F and t critical bands for the bounds test; rows ordered 10%, 5%, 1%.\n\
         pub(crate) fn bounds_bands(\n\
         \x20   case: BoundsCase,\n\
         \x20   k: usize,\n\
         ) -> Result<([BoundsBand; 3], [BoundsBand; 3])> {\n\
         \x20   let table = match case {\n\
         \x20       BoundsCase::UnrestrictedConstant => &BOUNDS_CONSTANT,\n\
         \x20       BoundsCase::UnrestrictedConstantTrend => &BOUNDS_TREND,\n\
         \x20   };\n\
         \x20   let rows = table.get(k).ok_or_else(|| {\n\
         \x20       CoreError::Config(format!(\n\
         \x20           \"no bounds critical values tabulated for k = {k} (supported 0..={})\",\n\
         \x20           table.len() - 1\n\
         \x20       ))\n\
         \x20   })?;\n\
         \x20   let levels = [0.10, 0.05, 0.01];\n\
         \x20   let mut f = [BoundsBand { level: 0.0, lower: 0.0, upper: 0.0 }; 3];\n\
         \x20   let mut t = f;\n\
         \x20   for (i, &(fl, fu, tl, tu)) in rows.iter().enumerate() {\n\
         \x20       f[i] = BoundsBand { level: levels[i], lower: fl, upper: fu };\n\
         \x20       t[i] = BoundsBand { level: levels[i], lower: tl, upper: tu };\n\
         \x20   }\n\
         \x20   Ok((f, t))\n\
         }\n",
    );

    print!("{f}");
}
