//! Acceptance suite: one PASS/FAIL line per criterion with its runtime
//! bound. Run with `cargo test -p orbital-core --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orbital_core::amalgam::{
    check_theta_functoriality, check_theta_symmetry, theta_ended_tree, theta_metric_bounded, theta_metric_point,
    AmalgamOperator,
};
use orbital_core::fraisse::{builtin_dyadic_algebra, Dist, MetricClass, RootedTree};
use orbital_core::geometry::{
    level_graph, verify_ended_tree_qi, verify_tree_qi, verify_urysohn_qi, ExtNat, OrbitGraph,
};
use orbital_core::groups::{
    cameron_factorization, cayley_abels_graph, check_lemma_correspondence, indep_ob_factorization, orbit_code,
    pointwise_stabilizer, product_set, GroupSubset, MaskAction, Natural, Perm, PermGroup,
};
use orbital_core::independence::{
    builtin_convex_hull_independence, builtin_measure_independence, check_axioms, induced_independence, AxiomConfig,
    AxiomMode, AxiomReport, DyadicOracle, TreeOracle,
};
use orbital_core::structures::{automorphism_group_with_cap, canonical_form, Signature, Structure};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn q(v: i64) -> Dist {
    Ratio::from_integer(v)
}

fn tree_qi(ended: bool) -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for valence in 2..=4 {
        let r = if ended { verify_ended_tree_qi(valence, 5) } else { verify_tree_qi(valence, 5) }.unwrap();
        let dev = r.context.iter().find(|(k, _)| k == "max_deviation").map(|(_, v)| v.clone());
        ok &= r.passed() && dev.as_deref() == Some("0");
        detail.push(format!("valence {valence}: {} deviation {}", r.verdict().as_str(), dev.unwrap_or("-".into())));
    }
    outcome(ok, detail.join("; "))
}

fn urysohn() -> Outcome {
    let ds: Vec<Dist> = (1..=10).map(q).collect();
    let mut ok = true;
    let mut detail = Vec::new();
    for s in 1..=3 {
        let (r, samples) = verify_urysohn_qi(&ds, q(10), q(s), 50, 1000 + s as u64, &[], 3).unwrap();
        let mut bad = 0;
        for x in &samples {
            let steps = (x.d / q(s)).ceil().to_integer().max(1);
            let want_len = if steps == 1 && x.d != q(s) { 2 } else { steps };
            let within = match x.rho {
                ExtNat::Finite(v) => {
                    let scaled = q(s) * v as i64;
                    x.d <= scaled && scaled <= x.d + q(2 * s)
                }
                ExtNat::Infinite => false,
            };
            if !within || x.witness_len as i64 != want_len {
                bad += 1;
            }
        }
        ok &= r.passed() && samples.len() >= 50 && bad == 0;
        detail.push(format!("s={s}: {} pairs, {bad} outside bounds, {}", samples.len(), r.verdict().as_str()));
    }
    outcome(ok, detail.join("; "))
}

fn axiom_line(name: &str, r: &AxiomReport) -> String {
    format!("{name}: {} pairs, {} counterexamples, {} undecided", r.pairs, r.total_failed(), r.total_inconclusive())
}

fn independence_axioms() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    let l2 = check_axioms(
        &DyadicOracle::with_room(2, 4).unwrap(),
        &builtin_measure_independence(4).unwrap(),
        AxiomConfig::new(2, AxiomMode::AllPairs),
    )
    .unwrap();
    ok &= l2.passed();
    detail.push(axiom_line("dyadic 2 in 4, all pairs", &l2));
    let l3 = check_axioms(
        &DyadicOracle::with_room(3, 6).unwrap(),
        &builtin_measure_independence(6).unwrap(),
        AxiomConfig::new(2, AxiomMode::Reduced),
    )
    .unwrap();
    ok &= l3.passed();
    detail.push(axiom_line("dyadic 3 in 6, extension search", &l3));
    let tree = RootedTree::regular(4, 5);
    let rel = builtin_convex_hull_independence(&tree, 0).unwrap();
    let t = check_axioms(&TreeOracle::new(tree), &rel, AxiomConfig::new(2, AxiomMode::Reduced)).unwrap();
    ok &= t.passed();
    detail.push(axiom_line("tree, three children per vertex, depth 5", &t));
    outcome(ok, detail.join("; "))
}

fn ob_factorization() -> Outcome {
    let alg = builtin_dyadic_algebra(2).unwrap();
    let rel = builtin_measure_independence(2).unwrap();
    let s4 = PermGroup::symmetric(4);
    let r = indep_ob_factorization(&s4, &MaskAction, &[], &alg.bit_subalgebra(0), &|b, c| rel.holds(b, c).unwrap());
    outcome(
        r.verified() && r.v_a_order == 24,
        format!("|V_A| = {}, |U| = {}, |UFUFU| = {}, missing {}", r.v_a_order, r.u_order, r.product_size, r.missing),
    )
}

fn cameron() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for n in 4..=6 {
        let c = cameron_factorization(&PermGroup::symmetric(n), &[0]);
        ok &= c.verified && c.f.len() <= 2;
        detail.push(format!("size {n}: |F| = {} verified {}", c.f.len(), c.verified));
    }
    outcome(ok, detail.join("; "))
}

fn lemmas() -> Outcome {
    let alg = builtin_dyadic_algebra(2).unwrap();
    let g = automorphism_group_with_cap(&alg.elements().unwrap(), 16).unwrap();
    // One representative per element orbit, and an event with a point of it.
    let mut tuples: Vec<Vec<usize>> = (0..=4).map(|k| vec![(1usize << k) - 1]).collect();
    tuples.push(vec![0b0011, 0b0001]);
    tuples.push(vec![0b0011, 0b0100]);
    let mut instances = 0;
    let mut discrepancies = 0;
    for a in &tuples {
        let codes: Vec<Vec<usize>> = g
            .orbit(&Natural, a)
            .iter()
            .map(|b| orbit_code(&g, &Natural, &[a.clone(), b.clone()].concat()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for pick in 0..1usize << codes.len() {
            let s: BTreeSet<Vec<usize>> =
                codes.iter().enumerate().filter(|(i, _)| pick >> i & 1 == 1).map(|(_, c)| c.clone()).collect();
            for n in 0..=3 {
                instances += 1;
                let chk = check_lemma_correspondence(&g, a, &s, n);
                if !chk.report("lemma").passed() || chk.word_images != chk.path_endpoints {
                    discrepancies += 1;
                }
            }
        }
    }
    outcome(
        g.order() == 24 && discrepancies == 0,
        format!("|G| = {}, {instances} instances, {discrepancies} discrepancies", g.order()),
    )
}

fn amalgamation() -> Outcome {
    let wing = MetricClass::integers(3, 3).unwrap();
    let ops: Vec<Box<dyn AmalgamOperator>> = vec![
        Box::new(theta_metric_point(MetricClass::integers(6, 6).unwrap(), wing.clone())),
        Box::new(theta_metric_bounded(wing, q(3)).unwrap()),
        Box::new(theta_ended_tree()),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for op in &ops {
        let s = check_theta_symmetry(op.as_ref(), 3);
        let f = check_theta_functoriality(op.as_ref(), 3);
        ok &= s.passed() && f.passed();
        let count = |r: &orbital_core::report::Report| {
            r.context.iter().find(|(k, _)| k == "instances").map_or("?".into(), |(_, v)| v.clone())
        };
        detail.push(format!(
            "{}: symmetry {} ({}), functoriality {} ({})",
            op.name(),
            s.verdict().as_str(),
            count(&s),
            f.verdict().as_str(),
            count(&f)
        ));
    }
    let tree = RootedTree::regular(4, 4);
    let cls = MetricClass::integers(8, 8).unwrap();
    let ambient = Arc::new(tree.path_metric(&cls).unwrap());
    let ind = induced_independence(Arc::new(theta_metric_point(cls.clone(), cls)), ambient, &[0]).unwrap();
    let r = check_axioms(&TreeOracle::new(tree), &ind, AxiomConfig::new(2, AxiomMode::Reduced)).unwrap();
    ok &= r.passed();
    detail.push(axiom_line("induced independence on a tree path metric", &r));
    outcome(ok, detail.join("; "))
}

/// Least `Σ n_i · ρ_{R_{n_i}}(d_{i-1}, d_i)` over all decompositions
/// `b = d_0, …, d_k = c` through distinct vertices.
fn decomposition_minimum(n: usize, hop: &[Vec<Vec<ExtNat>>], b: usize, c: usize) -> ExtNat {
    if b == c {
        return ExtNat::Finite(0);
    }
    let step = |x: usize, y: usize| {
        hop.iter()
            .enumerate()
            .filter_map(|(l, h)| h[x][y].finite().map(|d| d * (l as u64 + 1)))
            .min()
            .map_or(ExtNat::Infinite, ExtNat::Finite)
    };
    let mut best = ExtNat::Infinite;
    let mut stack = vec![(b, 1u64 << b, ExtNat::Finite(0))];
    while let Some((at, used, acc)) = stack.pop() {
        for next in 0..n {
            if used >> next & 1 == 1 {
                continue;
            }
            let s = step(at, next);
            if !s.is_finite() {
                continue;
            }
            let total = acc + s;
            if next == c {
                best = best.min(total);
            } else {
                stack.push((next, used | 1 << next, total));
            }
        }
    }
    best
}

fn weighted_agrees(n: usize, edges: &[(usize, usize, u64)]) -> bool {
    let g = OrbitGraph::from_edges(n, edges);
    let hop: Vec<Vec<Vec<ExtNat>>> = (1..=3)
        .map(|l| {
            let h = level_graph(&g, l);
            (0..n).map(|s| h.hop_distances(s)).collect()
        })
        .collect();
    (0..n).all(|b| {
        let fast = g.weighted_distances(b);
        (0..n).all(|c| fast[c] == decomposition_minimum(n, &hop, b, c))
    })
}

fn weighted_metric() -> Outcome {
    let mut graphs = 0usize;
    let mut bad = 0usize;
    let pairs = |n: usize| -> Vec<(usize, usize)> { (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect() };
    // Every chain R_1 ⊆ R_2 ⊆ R_3 on up to four vertices.
    for n in 1..=4 {
        let p = pairs(n);
        for code in 0..4usize.pow(p.len() as u32) {
            let edges: Vec<_> = p
                .iter()
                .enumerate()
                .filter_map(|(i, &(u, v))| {
                    let w = (code / 4usize.pow(i as u32) % 4) as u64;
                    (w > 0).then_some((u, v, w))
                })
                .collect();
            graphs += 1;
            bad += usize::from(!weighted_agrees(n, &edges));
        }
    }
    // Every graph on five and six vertices as a chain of length one, and
    // seeded chains of length three.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in 5..=6 {
        let p = pairs(n);
        for mask in 0..1usize << p.len() {
            let edges: Vec<_> =
                p.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &(u, v))| (u, v, 1)).collect();
            graphs += 1;
            bad += usize::from(!weighted_agrees(n, &edges));
        }
        for _ in 0..5000 {
            let edges: Vec<_> = p
                .iter()
                .filter_map(|&(u, v)| {
                    let w = rng.gen_range(0..4u64);
                    (w > 0).then_some((u, v, w))
                })
                .collect();
            graphs += 1;
            bad += usize::from(!weighted_agrees(n, &edges));
        }
    }
    outcome(bad == 0, format!("{graphs} weighted graphs, {bad} disagreements"))
}

fn cayley_abels() -> Outcome {
    let transpositions =
        |n: usize| GroupSubset::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| Perm::transposition(n, i, j))));
    let s4 = PermGroup::symmetric(4);
    let k4 = cayley_abels_graph(&s4, &pointwise_stabilizer(&s4, &[0]), &transpositions(4)).unwrap();
    let mut ok = k4.vertex_count() == 4 && k4.is_complete();
    let mut detail = vec![format!("S4/Stab(0): {} vertices, complete {}", k4.vertex_count(), k4.is_complete())];

    // A = VUV for a symmetric U containing 1, so that AV = VA.
    let abels = |g: &PermGroup, fixed: &[usize], u: Vec<Perm>| {
        let v = pointwise_stabilizer(g, fixed);
        let u = GroupSubset::new(g.degree(), u.into_iter().chain([Perm::identity(g.degree())]));
        let a = product_set(&product_set(&v, &u), &v);
        (cayley_abels_graph(g, &v, &a).unwrap(), product_set(&a, &v) == product_set(&v, &a))
    };
    let r = Perm::rotation(4);
    let d4 = PermGroup::from_generators(4, &[r.clone(), Perm::new(vec![0, 3, 2, 1])], 100).unwrap();
    let cases = [
        ("D4/Stab(0), U = {1, r, r^-1}", abels(&d4, &[0], vec![r.clone(), r.inverse()])),
        (
            "S4/Stab(0,1), U = {1, (0 1), (1 2)}",
            abels(&s4, &[0, 1], vec![Perm::transposition(4, 0, 1), Perm::transposition(4, 1, 2)]),
        ),
    ];
    for (name, (g, commute)) in cases {
        let balls = (1..=3).all(|k| g.ball_within_words(k));
        ok &= balls && commute && g.is_connected() && g.is_left_invariant();
        detail.push(format!(
            "{name}: {} vertices, diameter {:?}, balls within words for k <= 3: {balls}",
            g.vertex_count(),
            g.diameter().unwrap_or(0)
        ));
    }
    outcome(ok, detail.join("; "))
}

fn relation(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Structure {
    let sig = Arc::new(Signature::new().relation("E", 2));
    let mut s = Structure::new(sig, n);
    for (x, y) in edges {
        s.add_tuple(0, vec![x, y]);
    }
    s
}

/// Least adjacency word over all orderings with the point first.
fn brute_key(n: usize, adj: &[Vec<bool>], point: usize) -> (usize, u64) {
    let rest: Vec<usize> = (0..n).filter(|&x| x != point).collect();
    let mut best = u64::MAX;
    let mut perm = rest.clone();
    permute(&mut perm, 0, &mut |order| {
        let full: Vec<usize> = std::iter::once(point).chain(order.iter().copied()).collect();
        let mut word = 0u64;
        for &x in &full {
            for &y in &full {
                word = word << 1 | u64::from(adj[x][y]);
            }
        }
        best = best.min(word);
    });
    (n, best)
}

fn permute(v: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

fn oracle_suites() -> Outcome {
    let mut forward: BTreeMap<(usize, u64), BTreeSet<orbital_core::structures::TypeCode>> = BTreeMap::new();
    let mut backward: BTreeMap<orbital_core::structures::TypeCode, BTreeSet<(usize, u64)>> = BTreeMap::new();
    let mut structures = 0usize;
    let mut check = |n: usize, adj: Vec<Vec<bool>>| {
        let s = relation(n, (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| adj[x][y]));
        for p in 0..n {
            let key = brute_key(n, &adj, p);
            let code = canonical_form(&s, &[p]);
            forward.entry(key).or_default().insert(code.clone());
            backward.entry(code).or_default().insert(key);
        }
    };
    let decode = |n: usize, bits: u64| -> Vec<Vec<bool>> {
        (0..n).map(|x| (0..n).map(|y| bits >> (x * n + y) & 1 == 1).collect()).collect()
    };
    // Every binary relation on up to four points.
    for n in 1..=4 {
        for bits in 0..1u64 << (n * n) {
            structures += 1;
            check(n, decode(n, bits));
        }
    }
    // On five points: every symmetric irreflexive relation, every
    // relation with at most three pairs, and seeded samples.
    let n = 5;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    for mask in 0..1usize << pairs.len() {
        let mut adj = vec![vec![false; n]; n];
        for (i, &(x, y)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                adj[x][y] = true;
                adj[y][x] = true;
            }
        }
        structures += 1;
        check(n, adj);
    }
    for bits in 0..1u64 << 25 {
        if bits.count_ones() <= 3 {
            structures += 1;
            check(n, decode(n, bits));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20_000 {
        structures += 1;
        check(n, decode(n, rng.gen::<u64>() & ((1 << 25) - 1)));
    }
    let split = forward.values().filter(|v| v.len() > 1).count() + backward.values().filter(|v| v.len() > 1).count();

    // ρ on seeded random graphs.
    let mut bad_metric = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=30);
        let p = rng.gen_range(0.02..0.4);
        let edges: Vec<(usize, usize, u64)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|_| rng.gen_bool(p))
            .map(|(u, v)| (u, v, 1))
            .collect();
        let g = OrbitGraph::from_edges(n, &edges);
        let d: Vec<Vec<ExtNat>> = (0..n).map(|s| g.hop_distances(s)).collect();
        let metric = (0..n).all(|x| {
            d[x][x] == ExtNat::Finite(0)
                && (0..n).all(|y| {
                    d[x][y] == d[y][x]
                        && (x == y || d[x][y] != ExtNat::Finite(0))
                        && (0..n).all(|z| d[x][z] <= d[x][y] + d[y][z])
                })
        });
        bad_metric += usize::from(!metric);
    }
    outcome(
        split == 0 && bad_metric == 0,
        format!(
            "{structures} structures, {} pointed classes, {split} mismatches; 100 random graphs, {bad_metric} non-metric",
            forward.len()
        ),
    )
}

/// Name, runtime bound in seconds, check.
type Criterion = (&'static str, u64, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("tree quasi-isometry", 10, || tree_qi(false)),
        ("ended tree quasi-isometry", 10, || tree_qi(true)),
        ("urysohn two-sided bound", 120, urysohn),
        ("independence axioms", 300, independence_axioms),
        ("V_A = UFUFU factorization", 1, ob_factorization),
        ("G = V_a F V_a factorization", 1, cameron),
        ("path/word lemma correspondence", 30, lemmas),
        ("functorial amalgamation", 300, amalgamation),
        ("weighted metric collapse", 60, weighted_metric),
        ("cayley-abels graph", 1, cayley_abels),
        ("oracle suites", 120, oracle_suites),
    ];
    let mut passed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took < Duration::from_secs(*limit);
        let ok = out.ok && in_time;
        passed += usize::from(ok);
        println!(
            "{} {:>2} {name}: {} [{:.2}s, limit {limit}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{} passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
