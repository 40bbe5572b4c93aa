//! Text formatting shared by every CSV writer.

use serde::Serialize;

use crate::channel::{density, FrameCsi, MomentSet};
use crate::error::Result;
use crate::waterfill::WaterfillSolution;

/// Formats `x` with 12 significant digits in the style of C's `%.12g`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_owned()
        } else if x > 0.0 {
            "inf".to_owned()
        } else {
            "-inf".to_owned()
        };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp) as usize, x);
        trim_zeros(&fixed).to_owned()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Per-block waterfilling output with columns `block,alpha,beta,gamma,density`.
pub fn waterfill_csv(csi: &FrameCsi, sol: &WaterfillSolution) -> String {
    let mut out = String::from("block,alpha,beta,gamma,density\n");
    for (i, (pair, &g)) in csi.pairs().iter().zip(sol.allocation.gammas()).enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            fmt_num(pair.alpha),
            fmt_num(pair.beta),
            fmt_num(g),
            fmt_num(density(g, pair))
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
struct WaterfillBlock {
    block: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    density: f64,
}

#[derive(Debug, Clone, Serialize)]
struct WaterfillJson {
    avg_power: f64,
    waterlevel: f64,
    capacity: f64,
    eligible_set: Vec<usize>,
    blocks: Vec<WaterfillBlock>,
}

/// JSON form of [`waterfill_csv`] plus waterlevel and capacity. Block
/// numbers are one-based.
pub fn waterfill_json(csi: &FrameCsi, sol: &WaterfillSolution, avg_power: f64) -> Result<String> {
    let blocks = csi
        .pairs()
        .iter()
        .zip(sol.allocation.gammas())
        .enumerate()
        .map(|(i, (p, &g))| WaterfillBlock {
            block: i + 1,
            alpha: p.alpha,
            beta: p.beta,
            gamma: g,
            density: density(g, p),
        })
        .collect();
    let doc = WaterfillJson {
        avg_power,
        waterlevel: sol.waterlevel,
        capacity: sol.capacity(csi)?,
        eligible_set: sol.eligible_set.iter().map(|i| i + 1).collect(),
        blocks,
    };
    Ok(to_json(&doc))
}

/// `name,value` rows in field order.
pub fn moments_csv(m: &MomentSet) -> String {
    let rows = [
        ("e_delta", m.e_delta),
        ("e_delta_pos", m.e_delta_pos),
        ("e_delta_sq_pos", m.e_delta_sq_pos),
        ("e_denom_pos", m.e_denom_pos),
        ("e_sum_pos", m.e_sum_pos),
        ("e_alpha", m.e_alpha),
        ("e_alpha_pos", m.e_alpha_pos),
        ("e_alpha_sq_pos", m.e_alpha_sq_pos),
        ("e_alpha_denom_pos", m.e_alpha_denom_pos),
        ("e_alpha_sum_pos", m.e_alpha_sum_pos),
    ];
    let mut out = String::from("name,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{}\n", fmt_num(v)));
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}
