use nalgebra::DVector;
use num_complex::Complex64;
use serde_json::Value;
use spinvar::analysis::{
    centered_square_sum_exact, limit_ratio_check, limit_ratio_table, ClaimBundle, ClaimId, Experiment,
};
use spinvar::rng;
use spinvar::sample_csv::{read_sample_csv, sample_rows, write_sample_csv};
use spinvar::states::{basis_state, random_state_indexed};
use spinvar::{GroupElement, PureState, SpinMatrices, SpinQuantum};

fn sq(tj: u32) -> SpinQuantum {
    SpinQuantum::from_twice(tj)
}

fn exp(tj: u32, seed: u64) -> Experiment {
    Experiment::new(sq(tj), 1.0, seed).unwrap()
}

fn num(report: &spinvar::analysis::ClaimReport, key: &str) -> f64 {
    report.details[key].as_f64().unwrap_or_else(|| panic!("{key} is not a number"))
}

#[test]
fn projected_gradient_matches_central_differences() {
    use rand::Rng;
    for tj in [1, 2, 5, 8] {
        let e = exp(tj, 0);
        let s = sq(tj);
        for i in 0..20 {
            let psi = random_state_indexed(s, 40, i).amplitudes().clone();
            let mut r = rng::stream(41, i);
            let raw = DVector::from_fn(psi.len(), |_, _| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
            // tangent direction at ψ
            let v = &raw - &psi * Complex64::from(psi.dotc(&raw).re);
            let along = |t: f64| {
                let w = &psi + &v * Complex64::from(t);
                e.objective(&(&w / Complex64::from(w.norm())))
            };
            let h = 1e-6;
            let fd = (along(h) - along(-h)) / (2.0 * h);
            let analytic = v.dotc(&e.projected_gradient(&psi)).re;
            assert!(
                (fd - analytic).abs() <= 1e-5 * analytic.abs().max(1e-3),
                "2j = {tj}: {fd} vs {analytic}"
            );
        }
    }
}

#[test]
fn optimizer_finds_coherent_states() {
    for tj in 1..=10 {
        let e = exp(tj, 2);
        let j = f64::from(tj) / 2.0;
        for r in e.minimize_delta(20, 1e-9).unwrap() {
            assert!(r.converged, "2j = {tj}");
            assert!((r.final_delta - j).abs() <= 1e-6 * j);
            assert!(r.final_delta >= j - 1e-9 * j, "below the proven bound");
            assert!(r.coherent_fidelity >= 1.0 - 1e-6);
            let n = r.spin_direction;
            assert!((n.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn optimizer_starting_on_the_minimum_does_not_move() {
    for tj in 1..=8 {
        let s = sq(tj);
        let e = exp(tj, 0);
        for twice_m in [i64::from(tj), -i64::from(tj)] {
            let r = e.minimize_from(&basis_state(s, twice_m).unwrap(), 1e-9).unwrap();
            assert!(r.converged);
            assert_eq!(r.iterations, 0);
        }
    }
}

#[test]
fn optimizer_is_gauge_invariant() {
    for tj in [2, 3, 6] {
        let s = sq(tj);
        let e = exp(tj, 0);
        for i in 0..5 {
            let start = random_state_indexed(s, 90, i);
            let a = e.minimize_from(&start, 1e-9).unwrap();
            let shifted = PureState::from_amplitudes(s, start.amplitudes() * Complex64::from_polar(1.0, 2.1));
            let b = e.minimize_from(&shifted.unwrap(), 1e-9).unwrap();
            assert!((a.final_delta - b.final_delta).abs() <= 1e-12);
        }
    }
}

#[test]
fn invariance_claim_and_negative_control() {
    let e = exp(4, 1);
    let report = e.verify_invariance(50, 50).unwrap();
    assert!(report.pass, "{:?}", report.details);
    assert_eq!(report.claim, ClaimId::Invariance);

    let half = exp(1, 1).verify_invariance(10, 10).unwrap();
    assert!(half.pass);

    // squeezing along Jz after the rotation is not a group action
    let squeeze = |u: &GroupElement, psi: &PureState| {
        let rotated = psi.transformed(u.matrix()).unwrap();
        let d = rotated.dimension();
        let w = DVector::from_fn(d, |k, _| rotated.amplitudes()[k] * Complex64::from(1.0 + k as f64));
        PureState::from_amplitudes(rotated.spin(), w).unwrap()
    };
    let control = e.verify_invariance_with_map(10, 10, &squeeze).unwrap();
    assert!(!control.pass);
}

#[test]
fn bounds_claim_examples() {
    let r = exp(2, 4).verify_bounds(10_000).unwrap();
    assert!(r.pass);
    assert!(num(&r, "observed_min") >= 1.0 && num(&r, "observed_max") <= 2.0);

    let half = exp(1, 4).verify_bounds(2_000).unwrap();
    assert!(half.pass);
    assert!(num(&half, "spread") <= 1e-12);
    assert!((num(&half, "observed_min") - 0.5).abs() < 1e-12);

    let r = exp(3, 4).verify_bounds(100).unwrap();
    assert!(r.pass);
    assert!((num(&r, "alpha_min_delta") - 1.5).abs() <= 1e-3);
    assert!((num(&r, "alpha_max_delta") - 3.75).abs() <= 1e-3);
}

#[test]
fn mean_claim_examples() {
    let r = exp(2, 7).mean_delta_check(200_000).unwrap();
    assert!(r.pass);
    assert_eq!(num(&r, "analytic_mean_delta"), 1.5);
    assert!((num(&r, "mc_mean_delta") - 1.5).abs() < 0.01);
    assert!((num(&r, "moment_route_jz2") - 2.0 / 12.0).abs() < 1e-14);

    let half = exp(1, 7).mean_delta_check(5_000).unwrap();
    assert!(half.pass);
    assert!(num(&half, "mc_std_error_delta") < 1e-15);
    assert!((num(&half, "mc_mean_delta") - 0.5).abs() < 1e-14);

    let r = exp(3, 7).mean_delta_check(50_000).unwrap();
    assert!(r.pass);
    assert_eq!(num(&r, "analytic_mean_delta"), 3.0);
}

#[test]
fn jz_bound_examples() {
    let r = exp(4, 3).jz_bound_check(10_000).unwrap();
    assert!(r.pass);
    assert!(num(&r, "max_abs_jz") <= 2.0 + 1e-12);
    assert!(num(&r, "near_saturating") >= 2.0);
    assert!(num(&r, "min_pole_fidelity") >= 1.0 - 1e-4);
}

#[test]
fn inequality_claim_passes() {
    for tj in 1..=10 {
        assert!(exp(tj, 6).inequality_check(1000).unwrap().pass, "2j = {tj}");
    }
}

#[test]
fn limit_table_rows() {
    let rows = limit_ratio_table(sq(100)).unwrap();
    assert_eq!(rows.len(), 100);
    assert_eq!((rows[0].numerator, rows[0].denominator), (2, 3));
    assert!(rows.windows(2).all(|w| w[1].ratio > w[0].ratio));
    let j50 = rows.last().unwrap();
    assert_eq!(j50.j, sq(100));
    assert!(j50.ratio > 0.99);
    let check = limit_ratio_check(sq(100)).unwrap();
    assert!(check.pass);
    assert_eq!(check.details["strictly_increasing"], Value::Bool(true));
}

#[test]
fn sum_identity_is_exact_to_one_thousand() {
    for n in 0..=1000 {
        let (lhs, rhs) = centered_square_sum_exact(n);
        assert_eq!(lhs, rhs, "N = {n}");
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let e = exp(5, 11);
            let bundle = ClaimBundle::new(vec![
                e.verify_invariance(8, 8).unwrap(),
                e.verify_bounds(3000).unwrap(),
                e.verify_minimum_set(6, 1e-9).unwrap(),
                e.mean_delta_check(5000).unwrap(),
            ]);
            serde_json::to_string(&bundle).unwrap()
        })
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn bundle_round_trips_through_json() {
    let e = exp(3, 2);
    let bundle = ClaimBundle::new(vec![e.verify_bounds(100).unwrap(), e.jz_bound_check(100).unwrap()]);
    let text = serde_json::to_string_pretty(&bundle).unwrap();
    let back = ClaimBundle::from_json(&text).unwrap();
    assert_eq!(back, bundle);
    assert!(text.contains("\"schema\": \"spinvar/1\""));
    assert!(text.contains("\"claim\": \"II\""));
}

#[test]
fn sample_rows_round_trip_and_respect_bounds() {
    let ops = SpinMatrices::new(sq(2), 1.0);
    let rows = sample_rows(&ops, 200, 5).unwrap();
    let mut buf = Vec::new();
    write_sample_csv(&mut buf, &rows).unwrap();
    let (s, back) = read_sample_csv(buf.as_slice()).unwrap();
    assert_eq!(s, sq(2));
    assert_eq!(back, rows);
    for r in &back {
        assert!(r.delta >= 1.0 - 1e-12 && r.delta <= 2.0 + 1e-12);
        assert!(r.state(s).unwrap().norm_defect() < 1e-14);
    }
    let header = String::from_utf8(buf).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 2 * 3 + 4);
}
