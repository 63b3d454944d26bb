//! Reference computations written independently of the library.

use fewshot_hs::rng::{HarnessRng, Stream};

/// F1 from precision and recall; 0 when nothing is predicted or present.
pub fn f1_via_precision_recall(preds: &[bool], golds: &[bool]) -> f64 {
    let tp = preds.iter().zip(golds).filter(|(p, g)| **p && **g).count() as f64;
    let predicted = preds.iter().filter(|p| **p).count() as f64;
    let actual = golds.iter().filter(|g| **g).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let precision = tp / predicted;
    let recall = tp / actual;
    2.0 * precision * recall / (precision + recall)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        adaptive(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
            + adaptive(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
}

pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, eps, 50)
}

/// Two-sided Student-t tail probability by quadrature. Substituting
/// `t = sqrt(df) tan(u)` turns the density into `cos(u)^(df - 1)`, so
/// `p = ∫_θ^{π/2} cos^{df-1} / ∫_0^{π/2} cos^{df-1}` with
/// `θ = atan(|t| / sqrt(df))`. Requires `df >= 1`.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    assert!(df >= 1.0, "oracle needs df >= 1, got {df}");
    let half_pi = std::f64::consts::FRAC_PI_2;
    let theta = (t.abs() / df.sqrt()).atan();
    let f = move |u: f64| u.cos().max(0.0).powf(df - 1.0);
    let total = integrate(&f, 0.0, half_pi, 1e-15);
    let tail = integrate(&f, theta, half_pi, 1e-15);
    (tail / total).min(1.0)
}

/// Welch statistic, Welch–Satterthwaite df and two-sided p.
pub fn welch_oracle(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let qa = va / na;
    let qb = vb / nb;
    let t = (ma - mb) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    (t, df, student_t_two_sided(t, df))
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let lf = ln_factorials(n);
    (0..=n)
        .map(|k| {
            if p == 0.0 {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            if p == 1.0 {
                return if k == n { 1.0 } else { 0.0 };
            }
            let ln = lf[n] - lf[k] - lf[n - k] + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln();
            ln.exp()
        })
        .collect()
}

/// Exact expected F1 when each of `pos` positives keeps its label with
/// probability `1 - flip` and each of `neg` negatives turns positive with
/// probability `flip`, by enumerating both binomials.
pub fn expected_f1_under_flips(pos: usize, neg: usize, flip: f64) -> f64 {
    let tp_pmf = binomial_pmf(pos, 1.0 - flip);
    let fp_pmf = binomial_pmf(neg, flip);
    let mut e = 0.0;
    for (tp, &ptp) in tp_pmf.iter().enumerate() {
        if ptp < 1e-300 {
            continue;
        }
        for (fp, &pfp) in fp_pmf.iter().enumerate() {
            if pfp < 1e-300 {
                continue;
            }
            let denom = (tp + fp + pos) as f64;
            let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / denom };
            e += ptp * pfp * f1;
        }
    }
    e
}

pub fn normal(rng: &mut HarnessRng, mean: f64, sd: f64) -> f64 {
    let u1 = rng.unit().max(f64::MIN_POSITIVE);
    let u2 = rng.unit();
    mean + sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Twenty seeded sample pairs of varying size, spread and offset.
pub fn welch_pairs() -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..20u64)
        .map(|seed| {
            let mut rng = HarnessRng::new(seed, Stream::MockGenerator);
            let na = 3 + rng.below(10) as usize;
            let nb = 3 + rng.below(10) as usize;
            let shift = rng.unit() * 0.2;
            let sa = 0.01 + rng.unit() * 0.1;
            let sb = 0.01 + rng.unit() * 0.1;
            let a = (0..na).map(|_| normal(&mut rng, 0.6, sa)).collect();
            let b = (0..nb).map(|_| normal(&mut rng, 0.6 + shift, sb)).collect();
            (a, b)
        })
        .collect()
}

