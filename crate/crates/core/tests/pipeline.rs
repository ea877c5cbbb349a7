//! Encode, reduce and verify across all four problem families.

use proptest::prelude::*;
use semisym_core::qubo::{IntegerQubo, LocalFields};
use semisym_core::verify::or_completion_energy;
use semisym_core::{
    best_ancilla_energy, certify_step, classify_solution, factor_semi_symmetries,
    random_permutation, verify_equivalence, Assignment, Graph, Problem, QuboMatrix, Rational,
    ReductionTrace, Validity, VerifyLimits, ZMode,
};

fn problem(kind: u8, n: usize, p: f64, seed: u64) -> Problem {
    let g = Graph::erdos_renyi(n, p, seed).unwrap();
    match kind {
        0 => Problem::MaxClique(g),
        1 => Problem::HamiltonCycles(g),
        2 => Problem::GraphColoring {
            graph: g,
            colors: 3,
        },
        _ => {
            let g2 = g
                .permute(&random_permutation(n, seed.wrapping_add(1)))
                .unwrap();
            Problem::GraphIsomorphism { g1: g, g2 }
        }
    }
}

fn arb_instance() -> impl Strategy<Value = (QuboMatrix, bool)> {
    (0u8..4, 0.2f64..0.9, any::<u64>(), any::<bool>()).prop_map(|(kind, p, seed, tight)| {
        // keep every family within 16 variables
        let n = match kind {
            0 => 8 + (seed % 5) as usize,
            1 | 3 => 4,
            _ => 5,
        };
        let pr = problem(kind, n, p, seed);
        (pr.encode(pr.default_penalty()).unwrap().qubo, tight)
    })
}

fn mode(tight: bool) -> ZMode {
    if tight {
        ZMode::Tight
    } else {
        ZMode::Safe
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reductions_verify((q, tight) in arb_instance()) {
        let (qmod, trace) = factor_semi_symmetries(&q, 20, mode(tight)).unwrap();
        let rep = verify_equivalence(&q, &qmod, &trace, VerifyLimits::default()).unwrap();
        prop_assert!(rep.passed(), "{}", rep.render());
        prop_assert_eq!(rep.valid_count + rep.invalid_count, 1u64 << q.n());
        prop_assert_eq!(q.num_couplings() - qmod.num_couplings(), trace.coupling_reduction());
        prop_assert_eq!(trace.replay(&q).unwrap().to_text(), qmod.to_text());
        let parsed = ReductionTrace::parse(&trace.to_text()).unwrap();
        prop_assert_eq!(parsed, trace);
    }

    #[test]
    fn step_cases_match_closed_forms((q, tight) in arb_instance(), ctx_seed in any::<u64>()) {
        let (_, trace) = factor_semi_symmetries(&q, 20, mode(tight)).unwrap();
        let mats = trace.replay_each(&q).unwrap();
        for (s, step) in trace.steps.iter().enumerate() {
            let n = mats[s].n();
            let contexts = [
                Assignment::zeros(n),
                Assignment::new(vec![true; n]),
                Assignment::from_mask(ctx_seed.rotate_left(s as u32), n),
            ];
            for ctx in &contexts {
                let cases = certify_step(&mats[s], &mats[s + 1], step, ctx).unwrap();
                prop_assert_eq!(cases.len(), 8);
                for c in &cases {
                    prop_assert!(c.holds(), "case {} {:?}: {} vs {}", c.case, c.bits, c.measured, c.expected);
                }
                prop_assert!(cases[6].measured > Rational::from_integer(0));
            }
        }
    }

    /// The reduced minimum over every assignment, ancillas included, equals
    /// the minimum of the best ancilla completions.
    #[test]
    fn full_space_minimum_matches_best_completions((q, tight) in arb_instance()) {
        prop_assume!(q.n() <= 12);
        let (qmod, trace) = factor_semi_symmetries(&q, 6, mode(tight)).unwrap();
        prop_assume!(qmod.n() <= 18);
        let full = qmod.enumerate_spectrum(24).unwrap().min_energy();
        let mut best: Option<Rational> = None;
        for m in 0..1u64 << q.n() {
            let x = Assignment::from_mask(m, q.n());
            let (e, bits) = best_ancilla_energy(&qmod, &trace, &x, 20).unwrap();
            prop_assert_eq!(qmod.energy(&x.concat(&bits)).unwrap(), e);
            if let Some(or) = or_completion_energy(&qmod, &trace, &x).unwrap() {
                prop_assert_eq!(or, e);
            }
            best = Some(best.map_or(e, |b| b.min(e)));
        }
        prop_assert_eq!(best.unwrap(), full);
    }

    /// Incremental flip deltas agree with full recomputation along random walks.
    #[test]
    fn flip_deltas_match_recomputation((q, tight) in arb_instance(), walk in proptest::collection::vec(0usize..64, 1..60)) {
        let (qmod, _) = factor_semi_symmetries(&q, 20, mode(tight)).unwrap();
        let iq = IntegerQubo::from_matrix(&qmod).unwrap();
        let n = qmod.n();
        let mut fields = LocalFields::new(&iq, 0);
        for k in walk.into_iter().map(|k| k % n) {
            let before = fields.energy();
            let delta = fields.flip_delta(k);
            fields.flip(k);
            prop_assert_eq!(fields.energy(), before + delta);
            let x = Assignment::from_mask(fields.mask(), n);
            prop_assert_eq!(iq.to_rational(fields.energy()).unwrap(), qmod.energy(&x).unwrap());
        }
    }
}

#[test]
fn every_family_gets_reduced_somewhere() {
    for kind in 0u8..4 {
        // coloring pairs share couplings only through three common neighbours
        let (n, p) = match kind {
            0 => (10, 0.5),
            2 => (5, 0.9),
            _ => (4, 0.5),
        };
        let reduced = (0..20).any(|seed| {
            let pr = problem(kind, n, p, seed);
            let q = pr.encode(pr.default_penalty()).unwrap().qubo;
            !factor_semi_symmetries(&q, 20, ZMode::Tight)
                .unwrap()
                .1
                .steps
                .is_empty()
        });
        assert!(reduced, "family {kind} never reduced");
    }
}

#[test]
fn counterexamples_violate_their_check() {
    let g = Graph::from_edges(6, [(0, 2), (0, 3), (0, 5), (1, 3), (2, 5), (3, 4)]).unwrap();
    let pr = Problem::MaxClique(g);
    let q = pr.encode(pr.default_penalty()).unwrap().qubo;
    for z in 1..=9 {
        let (qmod, trace) =
            factor_semi_symmetries(&q, 1, ZMode::Fixed(Rational::from_integer(z))).unwrap();
        let rep = verify_equivalence(&q, &qmod, &trace, VerifyLimits::default()).unwrap();
        assert!(rep.valid_energy_preserved(), "z = {z}");
        assert_eq!(rep.optimum_preserved, z >= 2, "z = {z}");
        assert_eq!(rep.invalid_non_decrease, z >= 9, "z = {z}");
        for x in &rep.counterexamples {
            let (best, _) = best_ancilla_energy(&qmod, &trace, x, 20).unwrap();
            let e = q.energy(x).unwrap();
            match classify_solution(&q, &trace, x).unwrap() {
                Validity::Valid => assert_ne!(best, e),
                Validity::Invalid => assert!(best < e),
            }
        }
    }
}
