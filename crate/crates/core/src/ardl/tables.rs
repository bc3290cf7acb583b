//! Simulated null-distribution tables for the unit-root p-value and the
//! bounds test. Generated output: regenerate with
//! `cargo run --release -p replyscope-core --example gen_tables`.
//!
//! Unit-root grid: 200000 random walks, 1000 regression rows.
//! Bounds tables: 50000 replications per driver case, 999 rows.

use super::bounds::{BoundsBand, BoundsCase};
use super::unit_root::AdfVariant;
use crate::error::{CoreError, Result};

pub(crate) const ADF_TAIL_PROBS: [f64; 25] = [
    0.001, 0.005, 0.01, 0.02, 0.025,
    0.04, 0.05, 0.06, 0.08, 0.1,
    0.125, 0.15, 0.2, 0.25, 0.3,
    0.4, 0.5, 0.6, 0.7, 0.8,
    0.9, 0.95, 0.975, 0.99, 0.999,
];
pub(crate) const ADF_QUANTILES_CONSTANT: [f64; 25] = [
    -4.097646525895401, -3.6494379561531143, -3.4368459675190004, -3.2070494964517695, -3.1308088415007367,
    -2.9529654690502545, -2.863088922975039, -2.7880691267759348, -2.666807338216701, -2.5666559176939185,
    -2.4631020263917285, -2.370763412350003, -2.2177397628630247, -2.0883343364842433, -1.9716957572081688,
    -1.7609955472726424, -1.565234134392345, -1.3674514999945544, -1.1429332593818666, -0.8630994599023124,
    -0.4396486381210892, -0.08171809547743546, 0.22876761025847542, 0.6134405361440063, 1.3886937912316861,
];
pub(crate) const ADF_QUANTILES_TREND: [f64; 25] = [
    -4.603825249453072, -4.182509853731107, -3.9732093399565676, -3.7459106135370264, -3.6685780678062603,
    -3.4986081255459247, -3.4148216977105403, -3.3410855551122616, -3.2247390281592083, -3.126509842870434,
    -3.0222036554271146, -2.9359249757408956, -2.789964304313648, -2.6671424504654295, -2.5569623672310016,
    -2.3603652193820657, -2.1803418829499366, -2.0025353981518714, -1.810722564042541, -1.5816862778495833,
    -1.2462193667255355, -0.937233332451483, -0.6639610696788135, -0.3228102311547783, 0.38944581519492044,
];

/// Upper-level rows ordered 10%, 5%, 1%; index by k = number of
/// independent series (0..=3). Values are (f_lower, f_upper, t_lower,
/// t_upper) with lower meaning numerically smaller.
type Row = (f64, f64, f64, f64);
pub(crate) const BOUNDS_CONSTANT: [[Row; 3]; 4] = [
    [
        (6.593911324544903, 6.593911324544903, -2.567763142971163, -2.567763142971163),
        (8.230133927776059, 8.230133927776059, -2.8687591889854462, -2.8687591889854462),
        (11.898231973831033, 11.898231973831033, -3.4492595442062584, -3.4492595442062584),
    ],
    [
        (4.034949264178797, 4.75669598049036, -2.8970645009849223, -2.566506730260914),
        (4.896298053867327, 5.706229939099911, -3.2090285815313244, -2.8634066851153337),
        (6.830420667872338, 7.758630715878036, -3.7873656147370194, -3.432573336254163),
    ],
    [
        (3.1541239345575645, 4.106067478949861, -3.194521560895006, -2.5654021910329483),
        (3.7784917081487763, 4.803453705588552, -3.506274607613198, -2.8581961468091395),
        (5.1522253379075185, 6.281174663307218, -4.1005707247819165, -3.43575054792502),
    ],
    [
        (2.7257283623990074, 3.7408122962733352, -3.431345630289489, -2.5665919934817265),
        (3.2294569698976736, 4.314720248352552, -3.7497362827373606, -2.856580320913327),
        (4.357780737364218, 5.491153619854483, -4.356794877061845, -3.440716407875117),
    ],
];
pub(crate) const BOUNDS_TREND: [[Row; 3]; 4] = [
    [
        (9.745866810506417, 9.745866810506417, -3.1218370890255285, -3.1218370890255285),
        (11.569355463009105, 11.569355463009105, -3.4013755250817774, -3.4013755250817774),
        (15.69454347138306, 15.69454347138306, -3.9616339378657166, -3.9616339378657166),
    ],
    [
        (5.620028148430111, 6.259404124330658, -3.3959445025732995, -3.1387769250293625),
        (6.660560753066075, 7.3271141420710375, -3.691239372853744, -3.4292880381385107),
        (8.847771712308697, 9.64318369667988, -4.271908800561641, -3.965520441489722),
    ],
    [
        (4.185841803014892, 5.0573017584638045, -3.6328698745796397, -3.12975197648623),
        (4.8678035521209235, 5.830731872956579, -3.938264458826961, -3.4131624987177767),
        (6.436764596243844, 7.542651485757896, -4.529637885812676, -3.9920103656026686),
    ],
    [
        (3.479866458700631, 4.414241574606843, -3.8368923461817346, -3.1263061914781933),
        (4.022681745440579, 5.023052450651225, -4.131883780073286, -3.4095826585846227),
        (5.1974733675670075, 6.332943069602506, -4.705246797515961, -3.965025917378383),
    ],
];

/// P(T <= stat) under the unit-root null, by linear interpolation on the
/// simulated quantile grid; clamped to the grid ends in the far tails.
pub(crate) fn adf_p_value(variant: AdfVariant, stat: f64) -> f64 {
    let q: &[f64] = match variant {
        AdfVariant::Constant => &ADF_QUANTILES_CONSTANT,
        AdfVariant::ConstantTrend => &ADF_QUANTILES_TREND,
    };
    let p = &ADF_TAIL_PROBS;
    if stat <= q[0] {
        return p[0];
    }
    if stat >= q[q.len() - 1] {
        return p[p.len() - 1];
    }
    let i = q.partition_point(|v| *v < stat);
    let w = (stat - q[i - 1]) / (q[i] - q[i - 1]);
    p[i - 1] + w * (p[i] - p[i - 1])
}

/// F and t critical bands for the bounds test; rows ordered 10%, 5%, 1%.
pub(crate) fn bounds_bands(
    case: BoundsCase,
    k: usize,
) -> Result<([BoundsBand; 3], [BoundsBand; 3])> {
    let table = match case {
        BoundsCase::UnrestrictedConstant => &BOUNDS_CONSTANT,
        BoundsCase::UnrestrictedConstantTrend => &BOUNDS_TREND,
    };
    let rows = table.get(k).ok_or_else(|| {
        CoreError::Config(format!(
            "no bounds critical values tabulated for k = {k} (supported 0..={})",
            table.len() - 1
        ))
    })?;
    let levels = [0.10, 0.05, 0.01];
    let mut f = [BoundsBand { level: 0.0, lower: 0.0, upper: 0.0 }; 3];
    let mut t = f;
    for (i, &(fl, fu, tl, tu)) in rows.iter().enumerate() {
        f[i] = BoundsBand { level: levels[i], lower: fl, upper: fu };
        t[i] = BoundsBand { level: levels[i], lower: tl, upper: tu };
    }
    Ok((f, t))
}
