use krein::weights::{make_weight, WeightSpec};
use krein::KreinError;
use krein_cli::config::ExperimentConfig;
use krein_cli::experiments::*;

fn cfg(weight: &str) -> ExperimentConfig {
    ExperimentConfig { weight: weight.into(), ..ExperimentConfig::default() }
}

fn num(o: &Outcome, key: &str) -> f64 {
    o.summary[key].as_f64().unwrap_or_else(|| panic!("summary has no {key}: {}", o.summary))
}

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn steklov_identity_weight_is_exact() {
    let o = steklov_sweep(&ExperimentConfig { p: 2.0, ..cfg("const:c=1") }).unwrap();
    assert!(num(&o, "sup") <= 1e-10);
    for row in o.table.rows.iter() {
        assert!(row[2].parse::<f64>().unwrap() <= 1e-10);
    }
}

#[test]
fn steklov_small_bump_levels_off_near_first_order() {
    let delta = 0.1;
    let c = ExperimentConfig { p: 2.0, ..cfg(&format!("bump:delta={delta}")) };
    let o = steklov_sweep(&c).unwrap();
    // first order: P - e is the transform of H = delta sin(x) / (pi x) on (0, r)
    let h2 = |x: f64| {
        let s = if x == 0.0 { 1.0 } else { x.sin() / x };
        (delta * s / std::f64::consts::PI).powi(2)
    };
    let predicted = (2.0 * std::f64::consts::PI * simpson(h2, 0.0, c.r_max, 20_000)).sqrt();
    assert!(num(&o, "plateau") >= 0.8, "{}", o.summary);
    assert!(num(&o, "sup") <= 10.0 * predicted, "{} vs {predicted}", num(&o, "sup"));
}

#[test]
fn steklov_product_weight_stays_bounded() {
    let c = ExperimentConfig { p: 2.05, ..cfg("prod:[power:beta=0.3,center=-1;power:beta=-0.3,center=1]") };
    let o = steklov_sweep(&c).unwrap();
    let sup = num(&o, "sup");
    assert!(sup.is_finite());
    assert!((sup - 0.6076677589559576).abs() <= 1e-9 * sup, "baseline moved: {sup}");
    // the last quarter adds less than one percent
    let curve: Vec<(f64, f64)> = o.table.rows.iter().filter(|r| r[0] != "sup").map(|r| (r[0].parse().unwrap(), r[2].parse().unwrap())).collect();
    let at15 = curve.iter().filter(|(r, _)| *r <= 15.0).map(|c| c.1).fold(0.0, f64::max);
    assert!(sup <= 1.01 * at15);
}

fn bump_slope(p: f64) -> SlopeFit {
    perturbative_slope_fit(&ExperimentConfig { weight: "bump:delta=1".into(), ..ExperimentConfig::default() }, p).unwrap()
}

#[test]
fn deviation_vanishes_with_the_weight_gap() {
    let f = bump_slope(2.0);
    assert!(f.sups.windows(2).all(|w| w[0] < w[1]), "{:?}", f.sups);
    let ratio = f.sups[0] / f.sups[f.sups.len() - 1];
    let span = f.deltas[0] / f.deltas[f.deltas.len() - 1];
    assert!(ratio <= span.powf(0.9), "{ratio}");
}

/// The literal form of the limit statement: at least a hundredfold drop over
/// two decades of delta. A linear law sits exactly on the threshold.
#[test]
#[ignore = "measured 1.0319e-2; second-order term keeps the ratio just above 1e-2"]
fn deviation_drops_a_hundredfold() {
    let f = bump_slope(2.0);
    assert!(f.sups[0] < 1e-2 * f.sups[f.sups.len() - 1], "{}", f.sups[0] / f.sups[f.sups.len() - 1]);
}

#[test]
fn divergence_probe_bounded_at_the_critical_exponent() {
    let ns = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
    let d = divergence_probe(1.5, 1.5, &ns, 512.0, 32768, Profile::Critical).unwrap();
    assert!(d.ratio <= 2.0, "{}", d.ratio);
}

#[test]
fn divergence_probe_bounded_for_an_integrable_bump() {
    let ns = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
    for p in [1.2, 1.5, 3.0] {
        let d = divergence_probe(p, p, &ns, 512.0, 32768, Profile::Bump).unwrap();
        assert!(d.ratio <= 2.0 && d.norms.iter().all(|v| v.is_finite()), "p = {p}: {:?}", d.norms);
        let d = divergence_probe(3.0, p.min(3.0), &ns, 512.0, 32768, Profile::Bump).unwrap();
        assert!(d.ratio <= 2.0, "p = {p}: {}", d.ratio);
    }
}

#[test]
fn divergence_probe_rejects_bad_exponents() {
    assert!(matches!(divergence_probe(1.5, 2.0, &[1.0], 64.0, 1024, Profile::Critical), Err(KreinError::BadParameter(_))));
    assert!(matches!(divergence_probe(1.5, 1.0, &[1.0], 64.0, 1024, Profile::Critical), Err(KreinError::BadParameter(_))));
    assert!(matches!(divergence_probe(1.5, 1.2, &[0.0], 64.0, 1024, Profile::Critical), Err(KreinError::BadParameter(_))));
}

fn remainder_fit(k: usize, p: f64) -> (f64, f64) {
    let c = ExperimentConfig { weight: "bump:delta=1".into(), r_every: 4, k, p, ..ExperimentConfig::default() };
    let o = remainder_scaling(&c).unwrap();
    (num(&o, "slope"), num(&o, "prefactor"))
}

#[test]
fn remainder_scales_linearly() {
    let (s0, _) = remainder_fit(0, 2.0);
    let (s2, a2) = remainder_fit(1, 2.0);
    let (s4, a4) = remainder_fit(1, 4.0);
    for s in [s0, s2, s4] {
        assert!((0.9..=1.1).contains(&s), "{s}");
    }
    assert!((a2 - 0.529684096951849).abs() <= 1e-9 * a2, "p = 2 baseline moved: {a2}");
    assert!((a4 - 0.43509252104146523).abs() <= 1e-9 * a4, "p = 4 baseline moved: {a4}");
}

#[test]
#[ignore = "measured prefactors 0.435 (p = 4) and 0.530 (p = 2); L^p norms on the line are not ordered"]
fn remainder_prefactor_grows_with_p() {
    let (_, a2) = remainder_fit(1, 2.0);
    let (_, a4) = remainder_fit(1, 4.0);
    assert!(a4 > a2, "{a4} <= {a2}");
}

#[test]
fn mixed_norm_identity_is_zero() {
    let c = cfg("const:c=1");
    let m = mixed_norm(&c.weight().unwrap(), &c, 2.0).unwrap();
    assert_eq!(m.split, 0.0);
    assert!(m.curve.iter().all(|(_, v)| *v == 0.0));
}

#[test]
fn mixed_norm_split_is_stable_under_window_doubling() {
    let c = cfg("gauss:delta=0.1");
    let w = c.weight().unwrap();
    let a = mixed_norm(&w, &c, 2.0).unwrap().split;
    let b = mixed_norm(&w, &ExperimentConfig { r_max: 2.0 * c.r_max, ..c.clone() }, 2.0).unwrap().split;
    assert!(a.is_finite() && a > 0.0);
    assert!((b / a - 1.0).abs() <= 0.1, "{a} -> {b}");
}

#[test]
fn mixed_norm_split_is_linear_in_delta() {
    let deltas = [0.02, 0.05, 0.1];
    let c = ExperimentConfig::default();
    let splits: Vec<f64> = deltas.iter().map(|&d| mixed_norm(&make_weight(WeightSpec::Gauss { delta: d, center: 0.0, width: 1.0 }).unwrap(), &c, 2.0).unwrap().split).collect();
    let (slope, _, _) = loglog_fit(&deltas, &splits);
    assert!((0.9..=1.1).contains(&slope), "{slope}: {splits:?}");
    let q: Vec<f64> = splits.iter().zip(&deltas).map(|(s, d)| s / d).collect();
    assert!(q.iter().cloned().fold(0.0, f64::max) <= 1.5 * q.iter().cloned().fold(f64::INFINITY, f64::min));
}

#[test]
fn mixed_norm_needs_a_moment() {
    let c = cfg("logtail:a=1.5,b=0,delta=0.1");
    assert!(matches!(mixed_norm(&c.weight().unwrap(), &c, 2.0), Err(KreinError::RegularityNotCertified { .. })));
}

#[test]
fn invalid_grids_are_rejected_before_work() {
    let c = ExperimentConfig { dr: 30.0, ..cfg("const:c=1") };
    assert!(matches!(steklov_sweep(&c), Err(KreinError::BadParameter(_))));
    assert_eq!(KreinError::BadParameter(String::new()).exit_code(), 2);
}
