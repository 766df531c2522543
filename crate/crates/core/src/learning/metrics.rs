use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::model::{CondTable, Discriminator, GenerativeModel};
use crate::error::{Error, Result};

/// Both tables over their union support, `floor` added to empty entries, renormalized.
pub fn floored_pair(p: &CondTable, q: &CondTable, floor: f64) -> (Vec<f64>, Vec<f64>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for c in p.keys().chain(q.keys().filter(|c| !p.contains_key(*c))) {
        a.push(p.get(c).copied().filter(|&v| v > 0.0).unwrap_or(floor));
        b.push(q.get(c).copied().filter(|&v| v > 0.0).unwrap_or(floor));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    a.iter_mut().for_each(|v| *v /= sa);
    b.iter_mut().for_each(|v| *v /= sb);
    (a, b)
}

/// KL(p||q) + KL(q||p) after flooring.
pub fn symmetric_kl(p: &CondTable, q: &CondTable, floor: f64) -> f64 {
    if p.is_empty() && q.is_empty() {
        return 0.0;
    }
    let (a, b) = floored_pair(p, q, floor);
    a.iter().zip(&b).map(|(&x, &y)| x * (x / y).ln() + y * (y / x).ln()).sum()
}

/// Condition-averaged symmetric KL of `model` against `global`, over the
/// conditions where `global` has data.
pub fn model_divergence(model: &GenerativeModel, global: &GenerativeModel, floor: f64) -> Result<f64> {
    if !model.same_layout(global) {
        return Err(Error::BinMismatch);
    }
    let mut total = 0.0;
    let mut n = 0;
    for (g, f) in model.tables.iter().zip(&global.tables) {
        if f.is_empty() {
            continue;
        }
        total += symmetric_kl(g, f, floor);
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

/// The accuracy metric (1 / 2I) sum_i sum_s [G_i ln(G_i/F) + F ln(F/G_i)].
/// It is named after Jensen-Shannon but is a symmetrized KL with no midpoint.
pub fn jsd_metric(models: &[&GenerativeModel], global: &GenerativeModel, floor: f64) -> Result<f64> {
    if models.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for m in models {
        sum += model_divergence(m, global, floor)?;
    }
    Ok(sum / (2.0 * models.len() as f64))
}

/// V = (1/K) sum_k E_{f^b}[ln D] + E_{G}[ln(1 - D)], with D clamped to
/// [floor, 1 - floor]. K counts the conditions where f^b has data.
pub fn value_function(d: &Discriminator, generator: &GenerativeModel, mixture: &GenerativeModel, floor: f64) -> Result<f64> {
    if !generator.same_layout(mixture) || d.tables.len() != mixture.conditions() {
        return Err(Error::BinMismatch);
    }
    let clamp = |x: f64| x.max(floor).min(1.0 - floor);
    let mut total = 0.0;
    let mut k_count = 0;
    for k in 0..mixture.conditions() {
        let (fb, g) = (&mixture.tables[k], &generator.tables[k]);
        if fb.is_empty() {
            continue;
        }
        k_count += 1;
        total += fb.iter().map(|(c, w)| w * clamp(d.output(k + 1, c)).ln()).sum::<f64>();
        total += g.iter().map(|(c, w)| w * (1.0 - clamp(d.output(k + 1, c))).ln()).sum::<f64>();
    }
    Ok(if k_count == 0 { 0.0 } else { total / k_count as f64 })
}
