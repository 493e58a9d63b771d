use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasslab::measures::{Atoms, DiscreteMeasure, SampleCloud};
use wasslab::transport::{neighborhood_lower_bound, wasserstein_1d, wasserstein_discrete};

fn random_measure(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> DiscreteMeasure {
    let pts: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-3.0..3.0)).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    DiscreteMeasure::normalized(dim, pts, w).unwrap()
}

fn cost(a: &DiscreteMeasure, b: &DiscreteMeasure, i: usize, j: usize, p: f64) -> f64 {
    let d2: f64 = a
        .point(i)
        .iter()
        .zip(b.point(j))
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    d2.sqrt().powf(p)
}

/// Minimum cost over all basic feasible solutions, found by enumerating
/// spanning trees of the complete bipartite graph.
fn vertex_enumeration(a: &DiscreteMeasure, b: &DiscreteMeasure, p: f64) -> f64 {
    let (m, n) = (a.len(), b.len());
    let arcs: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(k);
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        r
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        start: usize,
        k: usize,
        arcs: &[(usize, usize)],
        chosen: &mut Vec<usize>,
        a: &DiscreteMeasure,
        b: &DiscreteMeasure,
        p: f64,
        best: &mut f64,
    ) {
        let (m, n) = (a.len(), b.len());
        if chosen.len() == k {
            let mut parent: Vec<usize> = (0..m + n).collect();
            for &e in chosen.iter() {
                let (i, j) = arcs[e];
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, m + j));
                if ri == rj {
                    return;
                }
                parent[ri] = rj;
            }
            // peel leaves to get the flows
            let mut excess: Vec<f64> = (0..m)
                .map(|i| a.weight(i))
                .chain((0..n).map(|j| -b.weight(j)))
                .collect();
            let mut alive: Vec<bool> = vec![true; chosen.len()];
            let mut flows = vec![0.0; chosen.len()];
            for _ in 0..chosen.len() {
                let mut deg = vec![0usize; m + n];
                for (t, &e) in chosen.iter().enumerate() {
                    if alive[t] {
                        let (i, j) = arcs[e];
                        deg[i] += 1;
                        deg[m + j] += 1;
                    }
                }
                let (t, leaf) = chosen
                    .iter()
                    .enumerate()
                    .filter(|(t, _)| alive[*t])
                    .find_map(|(t, &e)| {
                        let (i, j) = arcs[e];
                        if deg[i] == 1 {
                            Some((t, i))
                        } else if deg[m + j] == 1 {
                            Some((t, m + j))
                        } else {
                            None
                        }
                    })
                    .unwrap();
                let (i, j) = arcs[chosen[t]];
                let f = if leaf == i { excess[i] } else { -excess[m + j] };
                flows[t] = f;
                excess[i] -= f;
                excess[m + j] += f;
                alive[t] = false;
            }
            if flows.iter().any(|&f| f < -1e-12) {
                return;
            }
            let c: f64 = chosen
                .iter()
                .zip(&flows)
                .map(|(&e, &f)| f * cost(a, b, arcs[e].0, arcs[e].1, p))
                .sum();
            if c < *best {
                *best = c;
            }
            return;
        }
        for e in start..arcs.len() {
            if arcs.len() - e < k - chosen.len() {
                break;
            }
            chosen.push(e);
            rec(e + 1, k, arcs, chosen, a, b, p, best);
            chosen.pop();
        }
    }
    rec(0, k, &arcs, &mut chosen, a, b, p, &mut best);
    best
}

#[test]
fn flow_matches_vertex_enumeration_in_the_plane() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..6 {
        let (m, n) = if case < 3 { (5, 5) } else { (5, 4) };
        let a = random_measure(&mut rng, m, 2);
        let b = random_measure(&mut rng, n, 2);
        for p in [1.0, 2.0] {
            let (_, plan) = wasserstein_discrete(&a, &b, p).unwrap();
            let oracle = vertex_enumeration(&a, &b, p);
            assert!(
                (plan.cost_p - oracle).abs() <= 1e-9 * oracle.max(1.0),
                "case {case} p {p}: {} vs {oracle}",
                plan.cost_p
            );
        }
    }
}

#[test]
fn equal_weight_flow_matches_best_permutation() {
    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 1 {
            return vec![vec![0]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let perms = permutations(6);
    for _ in 0..10 {
        let pa: Vec<f64> = (0..18).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pb: Vec<f64> = (0..18).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = SampleCloud::from_flat(3, pa, 0, "t").unwrap();
        let b = SampleCloud::from_flat(3, pb, 0, "t").unwrap();
        let best = perms
            .iter()
            .map(|s| {
                s.iter()
                    .enumerate()
                    .map(|(i, &j)| {
                        let d2: f64 = a
                            .point(i)
                            .iter()
                            .zip(b.point(j))
                            .map(|(x, y)| (x - y).powi(2))
                            .sum();
                        d2.powf(1.5)
                    })
                    .sum::<f64>()
                    / 6.0
            })
            .fold(f64::INFINITY, f64::min);
        let (_, plan) = wasserstein_discrete(&a, &b, 3.0).unwrap();
        assert!(
            (plan.cost_p - best).abs() < 1e-9,
            "{} vs {best}",
            plan.cost_p
        );
    }
}

#[test]
fn large_plane_instance_solves_quickly() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let pa: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pb: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = SampleCloud::from_flat(2, pa, 0, "t").unwrap();
    let b = SampleCloud::from_flat(2, pb, 0, "t").unwrap();
    let t = std::time::Instant::now();
    let (_, plan) = wasserstein_discrete(&a, &b, 2.0).unwrap();
    let w = vec![1.0 / 512.0; 512];
    assert!(plan.marginal_error(&w, &w) < 1e-12);
    assert!(t.elapsed().as_secs_f64() < 20.0, "{:?}", t.elapsed());
}

fn measure_strategy(max_atoms: usize, dim: usize) -> impl Strategy<Value = DiscreteMeasure> {
    (1..=max_atoms).prop_flat_map(move |n| {
        (
            prop::collection::vec(-4.0f64..4.0, n * dim),
            prop::collection::vec(0.01f64..1.0, n),
        )
            .prop_filter_map("distinct points", move |(pts, w)| {
                DiscreteMeasure::normalized(dim, pts, w).ok()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_and_flow_agree(a in measure_strategy(32, 1), b in measure_strategy(32, 1), p in 1.0f64..3.0) {
        let q = wasserstein_1d(&a, &b, p).unwrap();
        let (f, plan) = wasserstein_discrete(&a, &b, p).unwrap();
        prop_assert!((q - f).abs() <= 1e-9, "{} vs {}", q, f);
        prop_assert!(plan.marginal_error(a.weights(), b.weights()) <= 1e-9);
    }

    #[test]
    fn symmetric_and_triangle(a in measure_strategy(8, 2), b in measure_strategy(8, 2), c in measure_strategy(8, 2), p in 1.0f64..3.0) {
        let ab = wasserstein_discrete(&a, &b, p).unwrap().0;
        let ba = wasserstein_discrete(&b, &a, p).unwrap().0;
        let bc = wasserstein_discrete(&b, &c, p).unwrap().0;
        let ac = wasserstein_discrete(&a, &c, p).unwrap().0;
        prop_assert!((ab - ba).abs() <= 1e-9);
        prop_assert!(ac <= ab + bc + 1e-8);
    }

    #[test]
    fn monotone_in_order(a in measure_strategy(10, 2), b in measure_strategy(10, 2), p in 1.0f64..2.5, dq in 0.0f64..2.0) {
        let wp = wasserstein_discrete(&a, &b, p).unwrap().0;
        let wq = wasserstein_discrete(&a, &b, p + dq).unwrap().0;
        prop_assert!(wp <= wq + 1e-9);
    }

    #[test]
    fn neighborhood_bound_below_cost(a in measure_strategy(10, 2), b in measure_strategy(10, 2),
                                     cx in -3.0f64..3.0, cy in -3.0f64..3.0, rb in 0.0f64..3.0, r in 0.01f64..3.0) {
        let (_, plan) = wasserstein_discrete(&a, &b, 2.0).unwrap();
        let lb = neighborhood_lower_bound(&a, &b, &[cx, cy], rb, r, 2.0).unwrap();
        prop_assert!(lb <= plan.cost_p + 1e-12);
    }
}
