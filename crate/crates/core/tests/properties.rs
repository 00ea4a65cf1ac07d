use ergolab::approx::{entropy_dense_approx, markovization_order};
use ergolab::ldp::{cgf, level1_rate};
use ergolab::lorenz::{inverse_branch, LorenzModel};
use ergolab::suspension::{flow_topological_entropy, irregular_point, BlockSchedule, SuspensionSystem};
use ergolab::symbolic::{
    dstar_distance, higher_block_recode, CylinderMarginals, FunctionRole, LocallyConstantFunction, MarkovMeasure,
    SftGraph,
};
use ergolab::thermo::{equilibrium_state, gibbs_constant_audit, pressure, rate_functional, RateInput};
use proptest::prelude::*;

fn transitive_sft() -> impl Strategy<Value = SftGraph> {
    (2usize..=4)
        .prop_flat_map(|n| prop::collection::vec(prop::collection::vec(any::<bool>(), n), n))
        .prop_filter_map("not transitive", |t| {
            let s = SftGraph::validate(&t).ok()?;
            (s.is_transitive() && s.topological_entropy().ok()? > 1e-3).then_some(s)
        })
}

/// Positive weights on the allowed edges of `sft`.
fn chain_on(sft: &SftGraph, w: &[f64]) -> MarkovMeasure {
    let n = sft.alphabet_size();
    let rows = (0..n)
        .map(|i| (0..n).map(|j| if sft.allows(i, j) { w[i * n + j] } else { 0.0 }).collect())
        .collect();
    MarkovMeasure::markov1(rows).unwrap()
}

fn sft_with_chain() -> impl Strategy<Value = (SftGraph, MarkovMeasure)> {
    (transitive_sft(), prop::collection::vec(0.05f64..1.0, 16)).prop_map(|(s, w)| {
        let m = chain_on(&s, &w);
        (s, m)
    })
}

fn order2_potential(sft: &SftGraph, v: &[f64]) -> LocallyConstantFunction {
    let n = sft.alphabet_size();
    LocallyConstantFunction::new(sft, 2, FunctionRole::Potential, v[..n * n].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parry_entropy_is_topological(s in transitive_sft()) {
        let h = s.topological_entropy().unwrap();
        prop_assert!((MarkovMeasure::parry(&s).unwrap().entropy() - h).abs() < 1e-10);
    }

    #[test]
    fn recoding_preserves_entropy(s in transitive_sft(), k in 2usize..4) {
        let r = higher_block_recode(&s, k).unwrap();
        prop_assert!((r.graph.topological_entropy().unwrap() - s.topological_entropy().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn marginals_are_consistent((_, m) in sft_with_chain()) {
        let c = CylinderMarginals::from_measure(&m, 4).unwrap();
        let a = c.alphabet_size();
        for k in 2..=4 {
            let (short, long) = (c.level(k - 1), c.level(k));
            for (w, &p) in short.iter().enumerate() {
                let right: f64 = (0..a).map(|s| long[w * a + s]).sum();
                prop_assert!((right - p).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dstar_is_a_metric(
        p in prop::collection::vec(0.05f64..1.0, 3),
        q in prop::collection::vec(0.05f64..1.0, 3),
        r in prop::collection::vec(0.05f64..1.0, 3),
    ) {
        let m = |v: &[f64]| {
            let t: f64 = v.iter().sum();
            CylinderMarginals::from_measure(&MarkovMeasure::bernoulli(&v.iter().map(|x| x / t).collect::<Vec<_>>()).unwrap(), 4).unwrap()
        };
        let (a, b, c) = (m(&p), m(&q), m(&r));
        let d = |x: &CylinderMarginals, y: &CylinderMarginals| dstar_distance(x, y).unwrap().value;
        prop_assert!(d(&a, &a) == 0.0 && d(&a, &b) >= 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-15);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-15);
    }

    #[test]
    fn variational_identity_and_rate_zero(s in transitive_sft(), v in prop::collection::vec(-2.0f64..2.0, 16)) {
        let psi = order2_potential(&s, &v);
        let eq = equilibrium_state(&s, &psi).unwrap();
        prop_assert!(eq.variational_defect(&psi).unwrap() <= 1e-8);
        prop_assert!(rate_functional(RateInput::Measure(&eq.measure), &psi, &s).unwrap().abs() <= 1e-8);
        let parry = MarkovMeasure::parry(&s).unwrap();
        prop_assert!(rate_functional(RateInput::Measure(&parry), &psi, &s).unwrap() >= -1e-10);
    }

    #[test]
    fn pressure_is_convex_in_q(s in transitive_sft(), v in prop::collection::vec(-1.0f64..1.0, 16)) {
        let g = order2_potential(&s, &v);
        let p = |q: f64| pressure(&s, &g.scale(q)).unwrap();
        let h = 0.25;
        for i in -8..8 {
            let q = i as f64 * h;
            prop_assert!(p(q - h) + p(q + h) - 2.0 * p(q) >= -1e-9);
        }
    }

    #[test]
    fn gibbs_constants_respect_the_eigenvector_bound(s in transitive_sft(), v in prop::collection::vec(-1.0f64..1.0, 16)) {
        let psi = order2_potential(&s, &v);
        let eq = equilibrium_state(&s, &psi).unwrap();
        let audit = gibbs_constant_audit(&eq.measure, &psi, &s, 8).unwrap();
        let bound = audit.eigenvector_bound.unwrap();
        prop_assert!(audit.rows.iter().all(|r| r.constant <= bound * (1.0 + 1e-9)));
    }

    #[test]
    fn cgf_is_a_pressure_difference(s in transitive_sft(), v in prop::collection::vec(-1.0f64..1.0, 16), q in -3.0f64..3.0) {
        let psi = order2_potential(&s, &v);
        let g = LocallyConstantFunction::indicator(&s, 0).unwrap();
        let eq = equilibrium_state(&s, &psi).unwrap();
        let lhs = cgf(&eq.measure, &g, q).unwrap();
        let rhs = pressure(&s, &psi.add_scaled(&g, q).unwrap()).unwrap() - eq.pressure;
        prop_assert!((lhs - rhs).abs() <= 1e-8);
    }

    #[test]
    fn level1_rate_vanishes_at_mean_and_is_convex((s, m) in sft_with_chain()) {
        let g = LocallyConstantFunction::indicator(&s, 0).unwrap();
        let mean = m.word_prob(&[0]);
        prop_assert!(level1_rate(&m, &g, &[mean]).unwrap().curve.points[0].value.abs() < 1e-9);
        let r = level1_rate(&m, &g, &[0.2 * mean, 0.5 * mean, mean, 0.5 * (1.0 + mean)]);
        if let Ok(r) = r {
            let v: Vec<f64> = r.curve.points.iter().map(|p| p.value).collect();
            prop_assert!(v.iter().all(|&x| x >= -1e-12));
            prop_assert!(v[0] >= v[1] - 1e-12);
        }
    }

    #[test]
    fn markovization_is_idempotent_and_entropy_monotone((_, m) in sft_with_chain()) {
        let c = CylinderMarginals::from_measure(&m, 5).unwrap();
        let back = markovization_order(&c, 1).unwrap();
        let d = dstar_distance(&c, &CylinderMarginals::from_measure(&back, 5).unwrap()).unwrap();
        prop_assert!(d.value <= 1e-12);
        let h: Vec<f64> = (1..=4).map(|k| markovization_order(&c, k).unwrap().entropy()).collect();
        prop_assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-10));
        prop_assert!(h.iter().all(|&x| x >= m.entropy() - 1e-10));
    }

    #[test]
    fn dense_certificates_hold(w in 0.1f64..0.9, p in 0.1f64..0.9) {
        let s = SftGraph::full_shift(2);
        let dirac = CylinderMarginals::from_sequence(&[1], 2, 8).unwrap();
        let coin = CylinderMarginals::from_measure(&MarkovMeasure::bernoulli(&[p, 1.0 - p]).unwrap(), 8).unwrap();
        let target = CylinderMarginals::mixture(&[(w, &dirac), (1.0 - w, &coin)]).unwrap();
        let reference = (1.0 - w) * MarkovMeasure::bernoulli(&[p, 1.0 - p]).unwrap().entropy();
        let (nu, cert) = entropy_dense_approx(&target, &s, 0.05, Some(reference)).unwrap();
        prop_assert!(cert.satisfied && nu.is_ergodic());
        prop_assert!(cert.dstar_bound < 0.05 && cert.entropy > reference - 0.05);
    }

    #[test]
    fn unit_roof_flow_is_the_base(s in transitive_sft()) {
        let susp = SuspensionSystem::constant_roof(s.clone(), 1.0).unwrap();
        let fe = flow_topological_entropy(&susp).unwrap();
        prop_assert!((fe.value - s.topological_entropy().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn every_lorenz_word_has_a_cylinder(bits in prop::collection::vec(0u8..2, 1..16)) {
        let m = LorenzModel::reference();
        let (lo, hi) = inverse_branch(&m, &bits).unwrap();
        prop_assert!(lo < hi);
        // the slope bound of f^{n−1} on a full-branch cylinder
        prop_assert!(hi - lo <= (2.0 * m.alpha()).powi(1 - bits.len() as i32) * (1.0 + 1e-12));
    }
}

#[test]
fn irregular_error_shrinks_with_blocks() {
    let e: Vec<f64> = [6, 8, 10]
        .iter()
        .map(|&b| irregular_point(&BlockSchedule::geometric(4.0, b).unwrap()).error())
        .collect();
    assert!(e[0] >= e[1] && e[1] >= e[2], "{e:?}");
}
