use proptest::prelude::*;

use vwh::diagnostics::check_l2_contraction;
use vwh::harness::{cooling_metric, ProbeMode};
use vwh::kernel::{MollifierKernel, MAX_DERIVATIVE_ORDER};
use vwh::potential::{regularize, OmegaSchedule, PotentialSpec, RegularizedPotential, Sign};
use vwh::solver::{
    sample_initial_bump, solve, solve_observed, ProblemSpec, SchemeConfig, SolutionSeries, SpaceTimeGrid,
    SpatialGrid,
};

/// Trapezoid moment over the kernel's own nodes, independent of the
/// kernel's cached Simpson moments.
fn trapezoid_moment(k: &MollifierKernel, j: i32) -> f64 {
    let p = k.profile();
    let s = p.samples();
    let h = p.spacing();
    let n = s.len();
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * p.node(i).powi(j) * s[i]
        })
        .sum::<f64>()
        * h
}

#[test]
fn every_kernel_has_unit_mass_and_vanishing_moments() {
    let bump = MollifierKernel::standard_bump();
    assert!((trapezoid_moment(&bump, 0) - 1.0).abs() <= 1e-8);
    for n in 1..=MAX_DERIVATIVE_ORDER {
        let k = bump.vanish_moments(n).unwrap();
        let mass = trapezoid_moment(&k, 0);
        assert!((mass - 1.0).abs() <= 1e-8, "n = {n}: mass {mass}");
        for j in 1..=n as i32 {
            let m = trapezoid_moment(&k, j);
            assert!(m.abs() <= 1e-6, "n = {n}: moment {j} = {m}");
        }
    }
}

#[test]
fn even_combinations_are_exactly_even() {
    let bump = MollifierKernel::standard_bump();
    let mut kernels = vec![bump.clone()];
    for n in 1..=MAX_DERIVATIVE_ORDER {
        kernels.push(bump.vanish_moments(n).unwrap());
    }
    for k in &kernels {
        let s = k.samples();
        let n = s.len();
        for i in 0..n {
            assert_eq!(s[i], s[n - 1 - i]);
        }
    }
    for j in [2usize, 4, 6] {
        let d = bump.derivative(j).unwrap();
        let s = d.samples();
        assert!((0..s.len()).all(|i| s[i] == s[s.len() - 1 - i]));
    }
}

fn scaled_moment(k: &MollifierKernel, omega: f64, j: i32) -> f64 {
    let view = k.scaled(omega).unwrap();
    let n = 40_001;
    let h = 2.0 * omega / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let x = -omega + i as f64 * h;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * x.powi(j) * view.eval(x)
        })
        .sum::<f64>()
        * h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn moments_scale_with_omega(omega in 0.05f64..5.0, j in 0i32..=4) {
        let k = MollifierKernel::standard_bump();
        let expected = omega.powi(j) * k.moment(j as usize).unwrap();
        let got = scaled_moment(&k, omega, j);
        prop_assert!((got - expected).abs() <= 1e-6 * omega.powi(j).max(1.0), "{got} vs {expected}");
    }
}

fn time_grid(a: f64, b: f64, dx: f64, dt: f64, t: f64) -> SpaceTimeGrid {
    SpaceTimeGrid::new(SpatialGrid::with_spacing(a, b, dx).unwrap(), dt, t, vec![t / 2.0, t]).unwrap()
}

fn gaussian_potential(grid: &SpatialGrid, centers: &[(f64, f64)], sign: Sign) -> RegularizedPotential {
    let spec = PotentialSpec::bounded_from_fn(
        grid,
        |x| {
            centers
                .iter()
                .map(|(c, h)| h * (-(x - c) * (x - c)).exp())
                .sum()
        },
        sign,
    )
    .unwrap();
    RegularizedPotential::unregularized(&spec, grid).unwrap()
}

fn problem(grid: SpaceTimeGrid, theta: f64, q: RegularizedPotential, u0: Vec<f64>) -> ProblemSpec {
    ProblemSpec::new(grid, SchemeConfig::new(theta).unwrap(), q, u0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn maximum_principle_and_contraction(
        centers in proptest::collection::vec((2.0f64..18.0, 0.0f64..50.0), 0..4),
        c0 in 1.0f64..19.0,
        dt in prop_oneof![Just(0.01), Just(0.05), Just(0.2)],
    ) {
        let grid = time_grid(0.0, 20.0, 0.02, dt, 2.0);
        let q = gaussian_potential(grid.space(), &centers, Sign::Positive);
        let u0 = sample_initial_bump(c0, grid.space()).unwrap();
        let p = problem(grid, 1.0, q, u0);
        let mut min = f64::INFINITY;
        let s = solve_observed(&p, |_, u| {
            min = u.iter().fold(min, |m, v| m.min(*v));
        }).unwrap();
        prop_assert!(min >= -1e-12);
        let report = check_l2_contraction(&s);
        prop_assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn solution_is_linear(
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        c1 in 3.0f64..17.0,
        c2 in 3.0f64..17.0,
        theta in prop_oneof![Just(0.5), Just(1.0), 0.5f64..1.0],
        neg in any::<bool>(),
    ) {
        let grid = time_grid(0.0, 20.0, 0.05, 0.1, 1.0);
        let sign = if neg { Sign::Negative } else { Sign::Positive };
        let q = gaussian_potential(grid.space(), &[(8.0, 2.0), (12.0, 0.5)], sign);
        let u = sample_initial_bump(c1, grid.space()).unwrap();
        let v = sample_initial_bump(c2, grid.space()).unwrap();
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect();
        let su = solve(&problem(grid.clone(), theta, q.clone(), u)).unwrap();
        let sv = solve(&problem(grid.clone(), theta, q.clone(), v)).unwrap();
        let sw = solve(&problem(grid, theta, q, w)).unwrap();
        for ((a, b), c) in su.snapshots.iter().zip(&sv.snapshots).zip(&sw.snapshots) {
            for i in 0..a.values.len() {
                let combo = alpha * a.values[i] + beta * b.values[i];
                prop_assert!((c.values[i] - combo).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn symmetric_data_stay_symmetric(strength in 0.0f64..5.0, eps in 0.1f64..1.0, squared in any::<bool>()) {
        let grid = time_grid(0.0, 20.0, 0.01, 0.2, 4.0);
        let k = MollifierKernel::standard_bump();
        let spec = if squared {
            PotentialSpec::dirac_squared(10.0, strength, Sign::Positive).unwrap()
        } else {
            PotentialSpec::dirac(10.0, strength, Sign::Positive).unwrap()
        };
        let q = regularize(&spec, &k, OmegaSchedule::Linear, eps, grid.space()).unwrap();
        let u0 = sample_initial_bump(10.0, grid.space()).unwrap();
        let s = solve(&problem(grid, 1.0, q, u0)).unwrap();
        for snap in &s.snapshots {
            let u = &snap.values;
            let n = u.len();
            let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..n {
                prop_assert!((u[i] - u[n - 1 - i]).abs() <= 1e-12 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn probe_ordering_is_scale_invariant(alpha in 1e-3f64..1e3) {
        let grid = time_grid(20.0, 60.0, 0.05, 0.2, 6.0);
        let space = grid.space().clone();
        let k = MollifierKernel::standard_bump();
        let specs = [
            PotentialSpec::zero(Sign::Positive),
            PotentialSpec::dirac(40.0, 1.0, Sign::Positive).unwrap(),
            PotentialSpec::dirac_squared(40.0, 1.0, Sign::Positive).unwrap(),
        ];
        let u0 = sample_initial_bump(50.0, &space).unwrap();
        let scaled: Vec<f64> = u0.iter().map(|v| alpha * v).collect();
        let run = |u: &[f64]| -> Vec<SolutionSeries> {
            specs
                .iter()
                .map(|s| {
                    let q = regularize(s, &k, OmegaSchedule::Linear, 0.2, &space).unwrap();
                    solve(&problem(grid.clone(), 1.0, q, u.to_vec())).unwrap()
                })
                .collect()
        };
        let (base, big) = (run(&u0), run(&scaled));
        let labels = ["case1", "case2", "case3"];
        let rb: Vec<(&str, &SolutionSeries)> = labels.into_iter().zip(base.iter()).collect();
        let rg: Vec<(&str, &SolutionSeries)> = labels.into_iter().zip(big.iter()).collect();
        for t in [3.0, 6.0] {
            let a = cooling_metric(&rb, &space, 40.0, t, ProbeMode::Cooling).unwrap();
            let b = cooling_metric(&rg, &space, 40.0, t, ProbeMode::Cooling).unwrap();
            prop_assert_eq!(a.outcome, b.outcome);
        }
    }
}

#[test]
fn solves_are_bitwise_deterministic_under_concurrency() {
    use rayon::prelude::*;
    let grid = time_grid(0.0, 100.0, 0.01, 0.2, 10.0);
    let k = MollifierKernel::standard_bump();
    let spec = PotentialSpec::dirac(40.0, 1.0, Sign::Positive).unwrap();
    let q = regularize(&spec, &k, OmegaSchedule::Linear, 0.2, grid.space()).unwrap();
    let u0 = sample_initial_bump(50.0, grid.space()).unwrap();
    let p = problem(grid, 1.0, q, u0);
    let alone = solve(&p).unwrap();
    let together: Vec<SolutionSeries> = (0..4).into_par_iter().map(|_| solve(&p).unwrap()).collect();
    for s in &together {
        assert_eq!(s.norm_trace, alone.norm_trace);
        assert_eq!(s.energy_trace, alone.energy_trace);
        for (a, b) in s.snapshots.iter().zip(&alone.snapshots) {
            assert_eq!(a.values, b.values);
        }
    }
}
