use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use loopforge::gff::{lupu_open_probability, p_same_sign, prob_connected};
use loopforge::graph::{refined, CableGraph};
use loopforge::green::{effective_conductance, green, harmonic_extension, two_point_mass, two_point_mass_from_green};
use loopforge::loops::{
    conditioned_poisson_pmf, crossing_pmf_discrete, cycle_basis, is_even_subgraph, sample_even_subgraph, switch_cycle,
    CrossingState, Parity,
};

fn multigraph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<bool>)> {
    (2usize..8).prop_flat_map(|n| {
        let edge = (0..n, 0..n).prop_filter("no self-loops", |(u, v)| u != v);
        prop::collection::vec(edge, 1..16).prop_flat_map(move |edges| {
            let m = edges.len();
            (Just(n), Just(edges), prop::collection::vec(any::<bool>(), m))
        })
    })
}

/// Path backbone `0 - 1 - ... - n-1` plus extra edges, boundary at `0`.
fn network() -> impl Strategy<Value = CableGraph> {
    (3usize..7)
        .prop_flat_map(|n| {
            let extra = prop::collection::vec(((0..n, 0..n), 0.2f64..5.0), 0..6);
            let rs = prop::collection::vec(0.2f64..5.0, n - 1);
            (Just(n), rs, extra)
        })
        .prop_map(|(n, rs, extra)| {
            let labels = (0..n).map(|i| i.to_string()).collect();
            let mut edges: Vec<(usize, usize, f64)> = rs.iter().enumerate().map(|(i, &r)| (i, i + 1, r)).collect();
            edges.extend(extra.into_iter().filter(|((u, v), _)| u != v).map(|((u, v), r)| (u, v, r)));
            let mut boundary = vec![false; n];
            boundary[0] = true;
            CableGraph::new(labels, edges, boundary, vec![0.0; n]).unwrap()
        })
}

proptest! {
    #[test]
    fn cycle_space_dimension((n, edges, include) in multigraph()) {
        let basis = cycle_basis(n, &edges, &include);
        let mut touched = vec![false; n];
        for (&(u, v), &inc) in edges.iter().zip(&include) {
            if inc {
                touched[u] = true;
                touched[v] = true;
            }
        }
        let e = include.iter().filter(|&&b| b).count();
        let v = touched.iter().filter(|&&b| b).count();
        prop_assert_eq!(basis.dimension() + v, e + basis.components);
        for c in &basis.cycles {
            let mut chosen = vec![false; edges.len()];
            for &i in c {
                prop_assert!(include[i]);
                chosen[i] = true;
            }
            prop_assert!(is_even_subgraph(n, &edges, &chosen));
        }
    }

    #[test]
    fn sampled_subgraphs_are_even((n, edges, include) in multigraph(), seed in any::<u64>()) {
        let basis = cycle_basis(n, &edges, &include);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sample_even_subgraph(&basis, &mut rng);
        prop_assert!(is_even_subgraph(n, &edges, &s));
        prop_assert!(s.iter().zip(&include).all(|(&s, &i)| !s || i));
    }

    #[test]
    fn switching_is_an_involution(
        (n, edges, include) in multigraph(),
        seed in any::<u64>(),
        extra in prop::collection::vec(0u64..3, 16),
    ) {
        let basis = cycle_basis(n, &edges, &include);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let odd = sample_even_subgraph(&basis, &mut rng);
        let counts: Vec<u64> = odd.iter().zip(&extra).map(|(&o, &k)| 2 * k + o as u64).collect();
        let state = CrossingState::from_counts(counts, include.clone());
        for c in &basis.cycles {
            let once = switch_cycle(&state, c).unwrap();
            prop_assert!(once.is_even(n, &edges));
            prop_assert_eq!(switch_cycle(&once, c).unwrap(), state.clone());
        }
        if let Some(closed) = include.iter().position(|&i| !i) {
            prop_assert!(switch_cycle(&state, &[closed]).is_err());
        }
    }

    #[test]
    fn mass_from_schur_matches_green(g in network(), a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let n = g.n_vertices();
        let (x, y) = (1, n - 1);
        let m1 = two_point_mass(&g, x, y, a, b).unwrap();
        let m2 = two_point_mass_from_green(&green(&g).unwrap(), x, y, a, b);
        prop_assert!((m1 - m2).abs() <= 1e-9 * (1.0 + m1.abs()), "{} vs {}", m1, m2);
        prop_assert!(m1 > 0.0);
    }

    #[test]
    fn refinement_keeps_effective_conductance(g in network(), k in 2usize..5) {
        let n = g.n_vertices();
        let c = effective_conductance(&g, 1, n - 1).unwrap();
        let c_fine = effective_conductance(&refined(&g, k).unwrap(), 1, n - 1).unwrap();
        prop_assert!((c - c_fine).abs() <= 1e-9 * (1.0 + c));
    }

    #[test]
    fn harmonic_extension_obeys_maximum_principle(g in network()) {
        let n = g.n_vertices();
        let h = harmonic_extension(&g, &[(n - 1, 1.0)]).unwrap();
        prop_assert!(h.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        prop_assert_eq!(h[0], 0.0);
    }

    #[test]
    fn lupu_probability_is_a_probability(gu in -5.0f64..5.0, gv in -5.0f64..5.0, r in 0.01f64..10.0) {
        let p = lupu_open_probability(gu, gv, r);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p, lupu_open_probability(gv, gu, r));
        if gu * gv <= 0.0 {
            prop_assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn sign_and_connection_laws(m in 0.0f64..20.0) {
        let same = p_same_sign(m);
        let conn = prob_connected(m);
        prop_assert!((0.5..=1.0).contains(&same));
        // connection needs the same sign
        prop_assert!(conn <= same + 1e-15);
    }

    #[test]
    fn conditioned_pmfs_normalize(mean in 0.01f64..20.0) {
        for parity in [Parity::None, Parity::Even, Parity::Odd] {
            let p = conditioned_poisson_pmf(mean, parity, 200).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().enumerate().all(|(k, &q)| parity.admits(k as u64) || q == 0.0));
        }
    }

    #[test]
    fn crossing_pmf_normalizes(a in 0u64..60, b in 0u64..60, pxy in 0.0f64..0.5) {
        let p = crossing_pmf_discrete(a, b, 1.0 - pxy, 1.0 - pxy, pxy).unwrap();
        prop_assert_eq!(p.len() as u64, a.min(b) + 1);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
