//! Closed-form values, checked through the public API.

use ergolab::approx::{markovization, nested_horseshoe_sequence, sub_sft_join, SubSft};
use ergolab::ldp::{exact_deviation_prob, exact_cgf, level1_rate};
use ergolab::lorenz::{inverse_branch, itinerary, LorenzModel, SYMBOL_L, SYMBOL_R};
use ergolab::suspension::{
    abramov_entropy, cylinder_counting_entropy, flow_integral, flow_level_oracle, flow_topological_entropy,
    irregular_point, BlockSchedule, CountingOptions, SuspensionSystem,
};
use ergolab::symbolic::{
    dstar_distance, higher_block_recode, CylinderMarginals, FunctionRole, LocallyConstantFunction, MarkovMeasure,
    SftGraph,
};
use ergolab::thermo::{constrained_entropy_oracle, equilibrium_state, pressure};

fn phi() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

fn h(p: f64) -> f64 {
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn golden_mean_shift() {
    let s = SftGraph::golden_mean();
    assert!(s.is_transitive() && s.is_mixing());
    let cycle = SftGraph::validate(&[vec![false, true], vec![true, false]]).unwrap();
    assert!(cycle.is_transitive() && !cycle.is_mixing());
    close(s.topological_entropy().unwrap(), phi().ln(), 1e-12);
    let parry = MarkovMeasure::parry(&s).unwrap();
    close(parry.transition()[0][0], 1.0 / phi(), 1e-12);
    close(parry.transition()[0][1], 1.0 / (phi() * phi()), 1e-12);
    close(parry.stationary()[0], 0.723606797749979, 1e-12);
    close(parry.entropy(), phi().ln(), 1e-12);
    let g = LocallyConstantFunction::indicator(&s, 1).unwrap();
    close(parry.integrate(&g).unwrap(), 0.276393202250021, 1e-12);
    let r = higher_block_recode(&s, 2).unwrap();
    assert_eq!(r.blocks.len(), 3);
    close(r.graph.topological_entropy().unwrap(), phi().ln(), 1e-12);
}

#[test]
fn marginals_and_dstar() {
    let two_cycle = CylinderMarginals::from_sequence(&[0, 1], 2, 3).unwrap();
    let level3 = two_cycle.level(3);
    assert_eq!(level3.iter().filter(|&&p| p == 0.5).count(), 2);
    assert_eq!(level3.iter().filter(|&&p| p == 0.0).count(), 6);
    let zero = CylinderMarginals::from_sequence(&[0], 2, 20).unwrap();
    let one = CylinderMarginals::from_sequence(&[1], 2, 20).unwrap();
    close(dstar_distance(&zero, &one).unwrap().value, 2.0 / 3.0, 1e-10);
}

#[test]
fn pressure_and_equilibria() {
    let s = SftGraph::full_shift(2);
    let g = LocallyConstantFunction::indicator(&s, 1).unwrap();
    for q in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        let psi = g.scale(q).with_role(FunctionRole::Potential);
        close(pressure(&s, &psi).unwrap(), (1.0 + f64::exp(q)).ln(), 1e-12);
        let eq = equilibrium_state(&s, &psi).unwrap();
        close(eq.measure.word_prob(&[1]), q.exp() / (1.0 + q.exp()), 1e-12);
    }
    let gm = SftGraph::golden_mean();
    let zero = LocallyConstantFunction::constant(&gm, 0.0, FunctionRole::Potential).unwrap();
    let eq = equilibrium_state(&gm, &zero).unwrap();
    let parry = CylinderMarginals::from_measure(&MarkovMeasure::parry(&gm).unwrap(), 6).unwrap();
    let d = dstar_distance(&CylinderMarginals::from_measure(&eq.measure, 6).unwrap(), &parry).unwrap();
    assert!(d.value <= 1e-10);
}

#[test]
fn level_sets() {
    let s = SftGraph::full_shift(2);
    let g = LocallyConstantFunction::indicator(&s, 1).unwrap();
    close(constrained_entropy_oracle(&s, &g, 0.5).unwrap().value, 2f64.ln(), 1e-9);
    close(constrained_entropy_oracle(&s, &g, 0.25).unwrap().value, 0.562335144618808, 1e-9);
    close(constrained_entropy_oracle(&s, &g, 0.75).unwrap().value, h(0.75), 1e-9);
    let window = |w: &ergolab::suspension::WordStats| (0.70..=0.80).contains(&w.frequency(1));
    let opts = CountingOptions {
        budget: 2f64.powi(25),
        ..CountingOptions::default()
    };
    let c = cylinder_counting_entropy(&s, 24, window, opts).unwrap();
    assert!(c.exact);
    close(c.value, h(0.75), 0.05);
}

#[test]
fn suspension_flows() {
    let s = SftGraph::full_shift(2);
    let roof = LocallyConstantFunction::new(&s, 1, FunctionRole::Roof, vec![1.0, 2.0]).unwrap();
    let coin = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
    close(abramov_entropy(&coin, &roof).unwrap(), 2f64.ln() / 1.5, 1e-12);
    let g = LocallyConstantFunction::indicator(&s, 1).unwrap();
    close(flow_integral(&coin, &roof, &g).unwrap(), 1.0 / 3.0, 1e-12);
    let susp = SuspensionSystem::new(s, roof).unwrap();
    let fe = flow_topological_entropy(&susp).unwrap();
    close(fe.value, phi().ln(), 1e-10);
    close(fe.abramov, phi().ln(), 1e-8);
    close(flow_level_oracle(&susp, &g, 1.0 / 3.0).unwrap(), 2f64.ln() / 1.5, 1e-8);
}

#[test]
fn irregular_points() {
    let p = irregular_point(&BlockSchedule::geometric(2.0, 10).unwrap());
    close(p.measured.0, 1.0 / 3.0, 0.02);
    close(p.measured.1, 2.0 / 3.0, 0.02);
    assert!(BlockSchedule::geometric(1.0, 10).is_err());
}

#[test]
fn lorenz_reference() {
    let m = LorenzModel::reference();
    let fp = m.fixed_point();
    assert_eq!((fp.x, fp.y), (1.0, -2.0 / 3.0));
    let x = m.period_two_point();
    close(2.0 * x.powf(0.75) + x, 1.0, 1e-12);
    close(m.f(x), -x, 1e-12);
    let w = itinerary(&m, x, 6).word;
    assert_eq!(w, [SYMBOL_R, SYMBOL_L, SYMBOL_R, SYMBOL_L, SYMBOL_R, SYMBOL_L]);
    let (lo, hi) = inverse_branch(&m, &[SYMBOL_R, SYMBOL_R]).unwrap();
    close(lo, 0.5f64.powf(4.0 / 3.0), 1e-15);
    assert_eq!(hi, 1.0);
}

#[test]
fn large_deviations() {
    let coin = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
    let s = SftGraph::full_shift(2);
    let g = LocallyConstantFunction::indicator(&s, 1).unwrap();
    for q in [-1.0, 0.5, 2.0] {
        close(exact_cgf(&coin, &g, q, 30).unwrap(), ((1.0 + f64::exp(q)) / 2.0).ln(), 1e-12);
    }
    let r = level1_rate(&coin, &g, &[0.75, 1.0]).unwrap();
    close(r.curve.points[0].value, 0.130812035941137, 1e-9);
    close(r.curve.points[1].value, 2f64.ln(), 1e-9);
    let p = exact_deviation_prob(&coin, &g, 20, 0.7).unwrap();
    close(p / (21700.0 / 1048576.0), 1.0, 1e-12);
}

#[test]
fn markovization_and_horseshoes() {
    let s = SftGraph::full_shift(2);
    let dirac = CylinderMarginals::from_sequence(&[0], 2, 2).unwrap();
    let coin = CylinderMarginals::from_measure(&MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap(), 2).unwrap();
    let mix = CylinderMarginals::mixture(&[(0.5, &dirac), (0.5, &coin)]).unwrap();
    assert_eq!(mix.level(2), [5.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0]);
    let m = markovization(&mix).unwrap();
    let zero = m.state_index(&[0]).unwrap();
    let one = m.state_index(&[1]).unwrap();
    close(m.transition()[zero][zero], 5.0 / 6.0, 1e-15);
    close(m.transition()[one][zero], 0.5, 1e-15);
    assert!(m.is_ergodic() && m.entropy() >= 0.5 * 2f64.ln());

    let a = SubSft::periodic_orbit(&s, &[0]).unwrap();
    let b = SubSft::periodic_orbit(&s, &[1]).unwrap();
    let j = sub_sft_join(&a, &b).unwrap();
    assert!(j.contains(&a) && j.contains(&b));
    close(j.entropy().unwrap(), 2f64.ln(), 1e-12);

    let stages = nested_horseshoe_sequence(&s, 8).unwrap();
    let last = stages.last().unwrap();
    assert_eq!(last.n, 8);
    assert!(last.entropy >= 2f64.ln() - 0.01);
    let sub = last.sub.as_ref().unwrap();
    for p in 1..8 {
        for word in 0..1u32 << p {
            let w: Vec<usize> = (0..p).map(|i| (word >> i & 1) as usize).collect();
            assert!(sub.admits_periodic(&w), "{w:?}");
        }
    }
}
