use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use spinvar::cpn::{
    beta_block_inverse, coords_of_state, cpn_volume, fs_metric_blocks, fs_volume_density, mean_over_cpn,
    moment_by_quadrature, moment_integral, sample_fs_coords_indexed, sphere_coords, to_state,
    volume_by_quadrature, CpnCoords, Functional, Method, ProjectiveDimension, SeparableFunctional,
};
use spinvar::states::random_state_indexed;
use spinvar::uncertainty::{delta, moments};
use spinvar::{Error, SpinMatrices, SpinQuantum};

fn pd(n: u32) -> ProjectiveDimension {
    ProjectiveDimension::new(n).unwrap()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Un-gauged amplitudes: `ψ_{N−k} = x_k e^{iβ_k}`, `β_0 = 0`.
fn raw_amplitudes(params: &[f64]) -> DVector<Complex64> {
    let n = params.len() / 2;
    let x = sphere_coords(&params[..n]).unwrap();
    DVector::from_fn(n + 1, |idx, _| {
        let k = n - idx;
        let beta = if k == 0 { 0.0 } else { params[n + k - 1] };
        Complex64::from_polar(x[k], beta)
    })
}

/// `Re(⟨∂_aψ|∂_bψ⟩ − ⟨∂_aψ|ψ⟩⟨ψ|∂_bψ⟩)` by central differences.
fn fs_metric_numeric(params: &[f64]) -> DMatrix<f64> {
    let h = 1e-6;
    let dim = params.len();
    let psi = raw_amplitudes(params);
    let partials: Vec<DVector<Complex64>> = (0..dim)
        .map(|a| {
            let mut p = params.to_vec();
            let mut m = params.to_vec();
            p[a] += h;
            m[a] -= h;
            (raw_amplitudes(&p) - raw_amplitudes(&m)) / Complex64::from(2.0 * h)
        })
        .collect();
    DMatrix::from_fn(dim, dim, |a, b| {
        (partials[a].dotc(&partials[b]) - partials[a].dotc(&psi) * psi.dotc(&partials[b])).re
    })
}

fn test_points(n: u32) -> Vec<Vec<f64>> {
    (0..5)
        .map(|i| {
            let c = sample_fs_coords_indexed(pd(n), 31, i);
            c.thetas().iter().chain(c.betas()).copied().collect()
        })
        .collect()
}

#[test]
fn volume_density_is_sqrt_det_of_pulled_back_metric() {
    for n in 1..=5 {
        for params in test_points(n) {
            let nu = n as usize;
            let coords = CpnCoords::new(params[..nu].to_vec(), params[nu..].to_vec()).unwrap();
            let g = fs_metric_numeric(&params);
            let oracle = g.determinant().sqrt();
            let got = fs_volume_density(&coords);
            assert!((got - oracle).abs() < 1e-6 * oracle.max(1e-3), "N = {n}: {got} vs {oracle}");
        }
    }
}

#[test]
fn metric_blocks_match_numeric_metric() {
    for n in 1..=4 {
        for params in test_points(n) {
            let nu = n as usize;
            let coords = CpnCoords::new(params[..nu].to_vec(), params[nu..].to_vec()).unwrap();
            let blocks = fs_metric_blocks(&coords).unwrap();
            let g = fs_metric_numeric(&params);
            for a in 0..nu {
                assert!((blocks.theta_diag[a] - g[(a, a)]).abs() < 1e-6);
                for b in 0..nu {
                    assert!((blocks.beta[(a, b)] - g[(nu + a, nu + b)]).abs() < 1e-6);
                    // no θ-β mixing
                    assert!(g[(a, nu + b)].abs() < 1e-6);
                }
            }
            let inv = beta_block_inverse(&coords).unwrap();
            let lu = blocks.beta.clone().try_inverse().unwrap();
            assert!((inv - lu).abs().max() < 1e-8 * blocks.beta.abs().max().recip().max(1.0));
        }
    }
}

#[test]
fn chart_singularities_are_reported() {
    let c = CpnCoords::new(vec![0.0, 0.4], vec![0.1, 0.2]).unwrap();
    assert!(matches!(fs_metric_blocks(&c), Err(Error::Singular { .. })));
    let c = CpnCoords::new(vec![PI / 2.0, 0.4], vec![0.1, 0.2]).unwrap();
    assert!(matches!(beta_block_inverse(&c), Err(Error::Singular { .. })));
}

#[test]
fn coordinates_round_trip_through_states() {
    for n in 1..=6 {
        for params in test_points(n) {
            let nu = n as usize;
            let coords = CpnCoords::new(params[..nu].to_vec(), params[nu..].to_vec()).unwrap();
            let x = sphere_coords(coords.thetas()).unwrap();
            assert!((x.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
            let st = to_state(&coords);
            let back = coords_of_state(&st).unwrap();
            assert!(to_state(&back).fidelity(&st) > 1.0 - 1e-14);
            for (a, b) in back.thetas().iter().zip(coords.thetas()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn quadrature_reproduces_volumes() {
    for n in 1..=8 {
        let want = PI.powi(n as i32) / factorial(n);
        assert!((cpn_volume(pd(n)) - want).abs() < 1e-14 * want);
        let got = volume_by_quadrature(pd(n), 64);
        assert!((got - want).abs() < 1e-10 * want, "N = {n}: {got} vs {want}");
    }
}

#[test]
fn quadrature_reproduces_moments() {
    for n in 1..=6 {
        let nu = n as usize;
        for m in 0..=nu {
            for k in 0..=nu {
                let want = PI.powi(n as i32) / factorial(n + 2) * if m == k { 2.0 } else { 1.0 };
                assert!((moment_integral(pd(n), m, k).unwrap() - want).abs() < 1e-14 * want);
                let got = moment_by_quadrature(pd(n), m, k, 64).unwrap();
                assert!((got - want).abs() < 1e-8 * want, "N = {n}, ({m}, {k})");
            }
        }
    }
    assert!(moment_integral(pd(2), 3, 0).is_err());
}

#[test]
fn separable_constant_integrates_to_volume() {
    for n in 1..=5 {
        let f = Functional::Separable(SeparableFunctional::one(pd(n)));
        let r = mean_over_cpn(&f, pd(n), Method::Quadrature { nodes: 32 }).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-12);
    }
}

#[test]
fn jz_squared_mean_by_every_method() {
    for n in 1..=8 {
        let f = Functional::jz_squared(pd(n), 1.0);
        let want = f64::from(n) / 12.0;
        let closed = mean_over_cpn(&f, pd(n), Method::ClosedMoment).unwrap();
        assert!((closed.estimate - want).abs() < 1e-14);
        if n <= 6 {
            let quad = mean_over_cpn(&f, pd(n), Method::Quadrature { nodes: 64 }).unwrap();
            assert!((quad.estimate - want).abs() < 1e-10);
        }
        let mc = mean_over_cpn(&f, pd(n), Method::MonteCarlo { samples: 40_000, seed: 5 }).unwrap();
        assert!((mc.estimate - want).abs() < 4.0 * mc.std_error, "N = {n}");
        assert_eq!(mc.method, "monte-carlo");
    }
}

#[test]
fn general_functionals_need_sampling() {
    let g = |_: &spinvar::PureState| 1.0;
    let f = Functional::General(&g);
    assert!(matches!(
        mean_over_cpn(&f, pd(2), Method::ClosedMoment),
        Err(Error::MethodUnavailable { .. })
    ));
    let r = mean_over_cpn(&f, pd(2), Method::MonteCarlo { samples: 10, seed: 0 }).unwrap();
    assert_eq!(r.estimate, 1.0);
    assert_eq!(r.std_error, 0.0);
}

#[test]
fn coordinate_sampler_agrees_with_gaussian_sampler() {
    // both are Fubini-Study uniform: E[x_k²] = 1/(N+1), E[x_k⁴] = 2/((N+1)(N+2))
    let n = 4u32;
    let count = 30_000u64;
    let nn = f64::from(n);
    for (label, pops) in [
        (
            "coords",
            (0..count)
                .map(|i| sphere_coords(sample_fs_coords_indexed(pd(n), 8, i).thetas()).unwrap()[1].powi(2))
                .collect::<Vec<_>>(),
        ),
        (
            "gaussian",
            (0..count)
                .map(|i| random_state_indexed(SpinQuantum::from_twice(n), 8, i).populations()[3])
                .collect(),
        ),
    ] {
        let st = spinvar::stats::SampleStats::from_values(&pops);
        assert!((st.mean - 1.0 / (nn + 1.0)).abs() < 4.0 * st.std_error, "{label}");
        let fourth: Vec<f64> = pops.iter().map(|p| p * p).collect();
        let st4 = spinvar::stats::SampleStats::from_values(&fourth);
        assert!((st4.mean - 2.0 / ((nn + 1.0) * (nn + 2.0))).abs() < 4.0 * st4.std_error, "{label}");
    }
}

#[test]
fn spin_components_are_symmetric_under_the_measure() {
    // mean⟨J_i⟩² = ħ²N/12 for each i
    let s = SpinQuantum::from_twice(3);
    let ops = SpinMatrices::new(s, 1.0);
    let count = 40_000u64;
    let mut sums = [Vec::new(), Vec::new(), Vec::new()];
    let mut deltas = Vec::new();
    for i in 0..count {
        let psi = random_state_indexed(s, 12, i);
        let m = moments(&psi, &ops).unwrap();
        for (sum, mean) in sums.iter_mut().zip(m.mean) {
            sum.push(mean * mean);
        }
        deltas.push(delta(&psi, &ops).unwrap());
    }
    for v in &sums {
        let st = spinvar::stats::SampleStats::from_values(v);
        assert!((st.mean - 0.25).abs() < 4.0 * st.std_error);
    }
    let st = spinvar::stats::SampleStats::from_values(&deltas);
    assert!((st.mean - 3.0).abs() < 4.0 * st.std_error);
}

#[test]
fn projective_dimension_validation() {
    assert!(ProjectiveDimension::new(0).is_err());
    assert!(ProjectiveDimension::of_spin(SpinQuantum::from_twice(0)).is_err());
    assert_eq!(ProjectiveDimension::of_spin(SpinQuantum::from_twice(5)).unwrap().get(), 5);
    assert!(CpnCoords::new(vec![0.1], vec![]).is_err());
}
