use geoconsensus::diagnostics::{
    consensus_integral, diameter, interaction_energy, rate_integral, w2_to_delta,
};
use geoconsensus::dynamics::{simulate, ParticleEnsemble, SimulationConfig};
use geoconsensus::experiments::is_equilibrium;
use geoconsensus::manifold::{
    frechet_mean, sample_ball, Euclidean, Hyperbolic, Manifold, SamplingScheme, So3, Sphere,
};
use geoconsensus::potential::{MonotoneTable, PotentialSpec};
use geoconsensus::verify::verify_all;
use proptest::prelude::*;

fn ensemble<M: Manifold>(m: M, radius: f64, seed: u64, n: usize) -> ParticleEnsemble<M> {
    let scheme = SamplingScheme::UniformDirection { radius };
    let points = sample_ball(&m, &m.origin(), scheme, seed, n).unwrap();
    ParticleEnsemble::uniform(m, points).unwrap()
}

fn pair_distances<M: Manifold>(e: &ParticleEnsemble<M>) -> Vec<f64> {
    let p = e.points();
    let mut out = Vec::new();
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            out.push(e.manifold().distance(&p[i], &p[j]));
        }
    }
    out
}

/// Checks the run-level invariants on every snapshot of a trajectory.
fn check_run<M: Manifold>(e0: &ParticleEnsemble<M>, p: &PotentialSpec, r: f64) -> Result<(), TestCaseError> {
    let desc = e0.manifold().descriptor();
    let cfg = SimulationConfig::new(0.02, 2.0, 5, e0.manifold().origin(), r);
    let traj = simulate(e0, p, &cfg).unwrap();
    // above r_c the contraction lemma does not apply
    let contracting = p.admissible_kc(&desc, r).unwrap_or(false);
    let mut prev: Option<(f64, f64, Vec<f64>)> = None;
    for s in &traj.states {
        prop_assert_eq!(s.masses(), e0.masses());
        prop_assert!((s.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.max_distance_from(&cfg.center) <= r + 1e-6);
        let energy = interaction_energy(s, p);
        let d = diameter(s);
        let pairs = pair_distances(s);
        if let Some((e_prev, d_prev, pairs_prev)) = &prev {
            prop_assert!(energy <= e_prev + 1e-10, "energy rose {} -> {}", e_prev, energy);
            if contracting {
                prop_assert!(d <= d_prev + 1e-9);
                for (a, b) in pairs.iter().zip(pairs_prev) {
                    prop_assert!(*a <= b + 1e-9, "pair distance grew {} -> {}", b, a);
                }
            }
        }
        prev = Some((energy, d, pairs));
    }
    Ok(())
}

fn beta() -> impl Strategy<Value = f64> {
    prop_oneof![Just(2.0), Just(3.0), Just(4.0), 2.0..6.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn geometric_suites_pass_for_any_seed(seed in any::<u64>()) {
        let report = verify_all(40, seed).unwrap();
        prop_assert!(report.passed(), "{}", report);
    }

    #[test]
    fn runs_on_so3_keep_their_invariants(seed in any::<u64>(), n in 2usize..10, beta in beta(), r in 0.2..1.2f64) {
        let e0 = ensemble(So3, r, seed, n);
        check_run(&e0, &PotentialSpec::power_law(beta).unwrap(), r)?;
    }

    #[test]
    fn runs_on_the_sphere_keep_their_invariants(seed in any::<u64>(), n in 2usize..10, beta in beta(), r in 0.2..1.2f64) {
        let e0 = ensemble(Sphere, r, seed, n);
        check_run(&e0, &PotentialSpec::power_law(beta).unwrap(), r)?;
    }

    #[test]
    fn runs_in_the_hyperbolic_plane_keep_their_invariants(seed in any::<u64>(), n in 2usize..8, beta in beta(), r in 0.2..2.0f64) {
        let e0 = ensemble(Hyperbolic, r, seed, n);
        check_run(&e0, &PotentialSpec::power_law(beta).unwrap(), r)?;
    }

    #[test]
    fn consensus_integral_is_sandwiched(seed in any::<u64>(), n in 1usize..12, r in 0.1..1.0f64) {
        fn check<M: Manifold>(e: &ParticleEnsemble<M>) -> Result<(), TestCaseError> {
            let mean = frechet_mean(e.manifold(), e.points(), e.masses()).unwrap();
            let c = consensus_integral(e);
            prop_assert!(c >= 0.0);
            prop_assert!(c <= 2.0 * w2_to_delta(e, &mean).unwrap() + 1e-12);
            Ok(())
        }
        check(&ensemble(Euclidean::new(3), r, seed, n))?;
        check(&ensemble(Sphere, r, seed, n))?;
        check(&ensemble(Hyperbolic, r, seed, n))?;
        check(&ensemble(So3, r, seed, n))?;
    }

    #[test]
    fn weak_equilibria_are_exactly_the_dead_zone_ensembles(
        seed in any::<u64>(),
        n in 2usize..8,
        target in prop_oneof![0.01..0.29f64, 0.31..1.0f64],
        beta in prop_oneof![Just(2.5), Just(3.0), 3.0..6.0f64],
    ) {
        let zeta = 0.3;
        let p = PotentialSpec::truncated_power_law(beta, zeta).unwrap();
        let raw = ensemble(Euclidean::new(2), 1.0, seed, n);
        let d = diameter(&raw);
        prop_assume!(d > 0.0);
        let points: Vec<Vec<f64>> = raw.points().iter().map(|x| x.iter().map(|c| c * target / d).collect()).collect();
        let e = ParticleEnsemble::uniform(Euclidean::new(2), points).unwrap();
        prop_assert_eq!(is_equilibrium(&e, &p).unwrap(), target <= zeta);
    }

    #[test]
    fn g_prime_matches_a_difference_quotient(
        s in 0.01..10.0f64,
        beta in 2.0..10.0f64,
        weights in (0.0..3.0f64, 0.0..3.0f64),
        zeta in 0.05..0.5f64,
    ) {
        let mut potentials = vec![PotentialSpec::power_law(beta).unwrap()];
        if weights.0 + weights.1 > 0.0 {
            potentials.push(PotentialSpec::quadratic_plus_quartic([weights.0, weights.1]).unwrap());
        }
        let truncated = PotentialSpec::truncated_power_law(beta.max(3.0), zeta).unwrap();
        if (s.sqrt() - zeta).abs() > 1e-2 {
            potentials.push(truncated);
        }
        for p in &potentials {
            let h = 1e-4 * s;
            let fd = (p.g_value(s + h).unwrap() - p.g_value(s - h).unwrap()) / (2.0 * h);
            let exact = p.g_prime(s);
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-12) + 1e-12, "{:?}: {} vs {}", p.kind, fd, exact);
        }
    }

    #[test]
    fn tabulated_g_is_the_integral_of_g_prime(ys in prop::collection::vec(0.0..2.0f64, 3..8), s in 0.05..4.0f64) {
        let mut acc = 0.0;
        let samples: Vec<(f64, f64)> = ys.iter().enumerate().map(|(k, y)| { acc += y; (k as f64 * 0.7, acc) }).collect();
        let p = PotentialSpec::custom_table(MonotoneTable::new(&samples, 0.0).unwrap());
        let h = 1e-5;
        let fd = (p.g_value(s + h).unwrap() - p.g_value(s - h).unwrap()) / (2.0 * h);
        prop_assert!((fd - p.g_prime(s)).abs() <= 1e-6 * p.g_prime(s).max(1.0));
    }

    #[test]
    fn classification_ignores_positive_rescaling(beta in 2.0..8.0f64, zeta in 0.05..0.5f64, c in 1e-3..1e3f64) {
        let descriptors = [Euclidean::new(2).descriptor(), Sphere.descriptor(), Hyperbolic.descriptor(), So3.descriptor()];
        for p in [PotentialSpec::power_law(beta).unwrap(), PotentialSpec::truncated_power_law(beta.max(3.0), zeta).unwrap()] {
            let q = p.scaled(c).unwrap();
            for d in &descriptors {
                prop_assert_eq!(p.classify(d).ok(), q.classify(d).ok());
            }
        }
    }

    #[test]
    fn quadratic_rate_integral_is_twice_the_log_ratio(from in 0.01..3.0f64, frac in 0.001..1.0f64) {
        let p = PotentialSpec::power_law(2.0).unwrap();
        let to = from * frac;
        let r = rate_integral(&p, from, to).unwrap();
        prop_assert!((r.value - 2.0 * frac.ln()).abs() < 1e-8);
    }
}

#[test]
fn composite_potential_dominates_its_parts() {
    let (a, b) = (0.7, 1.3);
    let mixed = PotentialSpec::quadratic_plus_quartic([a, b]).unwrap();
    let quad = PotentialSpec::power_law(2.0).unwrap();
    let quartic = PotentialSpec::power_law(4.0).unwrap();
    for k in 0..10_000 {
        let s = 10.0 * k as f64 / 10_000.0;
        assert!(mixed.g_prime(s) >= a * quad.g_prime(s));
        assert!(mixed.g_prime(s) >= b * quartic.g_prime(s));
    }
}

#[test]
fn euclidean_frechet_mean_is_the_weighted_average() {
    let m = Euclidean::new(2);
    let points = vec![vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 6.0]];
    let masses = [0.5, 0.25, 0.25];
    let mean = frechet_mean(&m, &points, &masses).unwrap();
    assert!((mean[0] - 0.75).abs() < 1e-12 && (mean[1] - 1.5).abs() < 1e-12);
}

#[test]
fn sphere_frechet_mean_of_two_points_is_the_midpoint() {
    let a = Sphere.point(&[1.0, 0.0, 0.0]).unwrap();
    let b = Sphere.point(&[0.0, 1.0, 0.0]).unwrap();
    let mean = frechet_mean(&Sphere, &[a, b], &[0.5, 0.5]).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((mean[0] - h).abs() < 1e-10 && (mean[1] - h).abs() < 1e-10 && mean[2].abs() < 1e-10);
}

#[test]
fn angles_of_known_triangles() {
    use geoconsensus::manifold::angle;
    use std::f64::consts::FRAC_PI_2;
    let m = Euclidean::new(2);
    let right = angle(&m, &vec![0.0, 0.0], &vec![1.0, 0.0], &vec![0.0, 2.0]).unwrap();
    assert!((right - FRAC_PI_2).abs() < 1e-15);
    // the octant triangle on the sphere has three right angles
    let x = Sphere.point(&[1.0, 0.0, 0.0]).unwrap();
    let y = Sphere.point(&[0.0, 1.0, 0.0]).unwrap();
    let z = Sphere.point(&[0.0, 0.0, 1.0]).unwrap();
    for (v, a, b) in [(&x, &y, &z), (&y, &z, &x), (&z, &x, &y)] {
        assert!((angle(&Sphere, v, a, b).unwrap() - FRAC_PI_2).abs() < 1e-14);
    }
    assert!(angle(&m, &vec![0.0, 0.0], &vec![0.0, 0.0], &vec![1.0, 0.0]).is_err());
}
