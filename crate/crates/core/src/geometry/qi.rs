//! Quasi-isometry constants and the tree / Urysohn verifications.

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{build_orbit_graph, rho, EdgeFamily, ExtNat, OrbitGraph};
use crate::error::{Error, Result};
use crate::fraisse::metric::is_metric;
use crate::fraisse::{
    build_limit_approximation, builtin_ended_tree_class, builtin_tree_class, builtin_urysohn_class, Dist, MetricClass,
    RootedTree,
};
use crate::orbits::{orbital_type, pointed_type};
use crate::report::Report;
use crate::structures::EmbeddingSearch;

type Q = Ratio<i64>;

/// `(K, C)` with `C` minimal first, then `K`, over the grid of step 1/4.
pub fn qi_fit(samples: &[(Q, Q)]) -> Result<(Q, Q)> {
    qi_fit_with_step(samples, Ratio::new(1, 4))
}

/// Least `C ≥ 0`, then least `K ≥ 1`, both multiples of `step`, with
/// `d₁/K − C ≤ d₂ ≤ K·d₁ + C` on every sample.
pub fn qi_fit_with_step(samples: &[(Q, Q)], step: Q) -> Result<(Q, Q)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if step <= Q::zero() || samples.iter().any(|(a, b)| *a < Q::zero() || *b < Q::zero()) {
        return Err(Error::Invalid("step must be positive and samples nonnegative".into()));
    }
    let on_grid = |x: Q| (x / step).ceil() * step;
    let top = samples.iter().map(|(a, b)| (*a).max(*b)).max().unwrap();
    let mut c = Q::zero();
    loop {
        let mut k = Q::one();
        let mut feasible = true;
        for &(d1, d2) in samples {
            if d2 + c > Q::zero() {
                k = k.max(d1 / (d2 + c));
            } else if d1 > Q::zero() {
                feasible = false;
            }
            if d1 > Q::zero() {
                k = k.max((d2 - c) / d1);
            } else if d2 > c {
                feasible = false;
            }
        }
        if feasible {
            return Ok((on_grid(k), c));
        }
        debug_assert!(c <= top);
        c += step;
    }
}

fn tree_report(title: &str, valence: usize, depth: usize, ended: bool) -> Result<Report> {
    let mut report = Report::new(title);
    report.context("valence", valence).context("depth", depth).context("margin", 0);
    let spec = if ended { builtin_ended_tree_class(valence) } else { builtin_tree_class(valence) };
    let m = build_limit_approximation(&spec, 2, depth)?;
    let t = RootedTree::regular(valence, depth.max(1));
    let interior = m.interior_points(0);
    if interior.len() < 2 {
        report.undecided("no interior pairs");
        return Ok(report);
    }
    let child = t.children[0][0];
    let up = orbital_type(&m, &[0, child])?.code;
    let family = if ended {
        let down = orbital_type(&m, &[child, 0])?.code;
        if down == up {
            report.fail("edge orientations share a type");
        }
        report.note(format!("R = {{{}, {}}}", up.short(), down.short()));
        EdgeFamily::new([up, down])
    } else {
        report.note(format!("R = {{{}}}", up.short()));
        EdgeFamily::new([up])
    };
    let g = build_orbit_graph(&m, &[0], &family, 0)?;
    let mut max_dev = 0u64;
    let mut pairs = 0usize;
    for (i, &u) in interior.iter().enumerate() {
        let dist = g.hop_distances(g.index_of(&[u])?);
        for &v in &interior[i + 1..] {
            pairs += 1;
            let want = t.distance(u, v) as u64;
            match dist[g.index_of(&[v])?] {
                ExtNat::Finite(r) => max_dev = max_dev.max(r.abs_diff(want)),
                ExtNat::Infinite => report.fail(format!("{u} and {v} disconnected")),
            }
        }
    }
    report.note(format!("vertices: {} interior pairs: {pairs}", g.vertex_count()));
    report.note(format!("max deviation: {max_dev}"));
    report.context("max_deviation", max_dev);
    if max_dev != 0 {
        report.fail(format!("rho differs from the tree metric by up to {max_dev}"));
    }
    Ok(report)
}

/// `X_{t,R}` for the adjacent-pair type against the tree metric on all
/// interior pairs.
pub fn verify_tree_qi(valence: usize, depth: usize) -> Result<Report> {
    tree_report("tree quasi-isometry", valence, depth, false)
}

/// As [`verify_tree_qi`] in the ended tree with both edge orientations.
pub fn verify_ended_tree_qi(valence: usize, depth: usize) -> Result<Report> {
    tree_report("ended tree quasi-isometry", valence, depth, true)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QiSample {
    pub y: usize,
    pub z: usize,
    pub d: Dist,
    pub rho: ExtNat,
    /// Number of steps of the amalgamated witness path.
    pub witness_len: u64,
}

impl QiSample {
    pub fn csv_header() -> &'static str {
        "y,z,d,rho,witness_len"
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.y, self.z, self.d, self.rho, self.witness_len)
    }
}

/// Distances on the path `v_0 … v_n` with steps `s` and chord
/// `d(v_0, v_n) = d`, capped. `n = ⌈d/s⌉`, except that a chord shorter
/// than `s` needs two steps.
fn witness_path(cls: &MetricClass, s: Dist, d: Dist) -> (u64, Vec<Vec<Dist>>) {
    let mut n = ((d / s).ceil().to_integer() as u64).max(1);
    if n == 1 && d != s {
        n = 2;
    }
    let len = n as usize + 1;
    let mut p = vec![vec![Dist::zero(); len]; len];
    for i in 0..len {
        for j in i + 1..len {
            let along = s * (j - i) as i64;
            let around = s * i as i64 + d + s * (len - 1 - j) as i64;
            let v = along.min(around).min(cls.cap());
            p[i][j] = v;
            p[j][i] = v;
        }
    }
    (n, p)
}

/// Samples interior pairs `(y, z)` of a Urysohn approximation, amalgamates
/// a witness path for each over `{y, z}`, and checks
/// `d/s ≤ ρ ≤ d/s + 2` with `ρ` computed on the distance-`s` orbit graph
/// of the enlarged space. Pairs listed in `forced` are checked as well.
/// The approximation is grown for `rounds` extension steps; too few
/// interior pairs for `samples` is a failure listing the open deficits.
pub fn verify_urysohn_qi(
    distances: &[Dist],
    diameter: Dist,
    s: Dist,
    samples: usize,
    seed: u64,
    forced: &[Dist],
    rounds: usize,
) -> Result<(Report, Vec<QiSample>)> {
    let cls = MetricClass::new(distances, diameter)?;
    if !cls.contains(&s) {
        return Err(Error::Invalid(format!("step {s} is not an admissible distance")));
    }
    let spec = builtin_urysohn_class(distances, diameter)?;
    let m = build_limit_approximation(&spec, 1, rounds)?;
    let mut report = Report::new("urysohn quasi-isometry");
    report
        .context("S", cls.distances().iter().map(Dist::to_string).collect::<Vec<_>>().join(","))
        .context("D", diameter)
        .context("s", s)
        .context("seed", seed)
        .context("rounds", rounds)
        .context("approximation_size", m.structure.size())
        .context("approximation_closed", m.closed)
        .context("margin", 0);

    let interior = m.interior_points(0);
    let mut d2 = cls.matrix(&m.structure).expect("metric approximation");
    let mut pairs: Vec<(usize, usize)> =
        interior.iter().flat_map(|&y| interior.iter().filter(move |&&z| z > y).map(move |&z| (y, z))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if pairs.len() < samples {
        report.fail(format!("approximation too small: {} interior pairs for {samples} samples", pairs.len()));
        for d in m.deficits.iter().take(20) {
            report.fail(format!("deficit over {:?}: {}", d.base, d.reason));
        }
        if m.deficits.len() > 20 {
            report.fail(format!("{} further deficits", m.deficits.len() - 20));
        }
        return Ok((report, Vec::new()));
    }
    pairs.shuffle(&mut rng);
    pairs.truncate(samples);
    for want in forced {
        match interior.iter().flat_map(|&y| interior.iter().map(move |&z| (y, z))).find(|&(y, z)| d2[y][z] == *want) {
            Some(p) => pairs.push(p),
            None => report.fail(format!("no interior pair at distance {want}")),
        }
    }
    if pairs.is_empty() {
        report.undecided("no interior pairs");
        return Ok((report, Vec::new()));
    }

    let mut paths = Vec::new();
    for &(y, z) in &pairs {
        let d = d2[y][z];
        let (n, p) = witness_path(&cls, s, d);
        if !is_metric(&p) || p.iter().flatten().any(|v| !v.is_zero() && !cls.contains(v)) {
            report.fail(format!("witness path for ({y},{z}) is not admissible"));
            continue;
        }
        let mut base = vec![y, z];
        for i in 1..n as usize {
            let mut f = vec![p[i][0], p[i][n as usize]];
            f.extend((1..i).map(|j| p[i][j]));
            let row = cls.capped_extension(&d2, &base, &f);
            let new = d2.len();
            for (c, v) in row.iter().enumerate() {
                d2[c].push(*v);
            }
            let mut last = row;
            last.push(Dist::zero());
            d2.push(last);
            base.push(new);
        }
        paths.push((y, z, n, p));
    }
    let big = cls.space(&d2).expect("capped amalgams stay admissible");
    if !cls.is_member(&big) {
        report.fail("enlarged space violates the triangle inequality");
        return Ok((report, Vec::new()));
    }
    report.context("enlarged_size", big.size());

    for (y, z, n, p) in &paths {
        let path = cls.space(p).unwrap();
        let found = EmbeddingSearch::new(&path, &big).fix(0, *y).fix(*n as usize, *z).first();
        if found.is_none() {
            report.fail(format!("witness path for ({y},{z}) does not embed"));
        }
    }

    // X over all points of the enlarged space; the pair type of a metric
    // space is its distance, so pairs at distance s are exactly the R-edges.
    let probe = (0..big.size())
        .flat_map(|x| (0..big.size()).map(move |y| (x, y)))
        .find(|&(x, y)| d2[x][y] == s)
        .expect("s is realized");
    let edge_code = pointed_type(&big, &[probe.0, probe.1]).code;
    let mut edges = Vec::new();
    for x in 0..big.size() {
        for y in x + 1..big.size() {
            if d2[x][y] == s {
                if pointed_type(&big, &[x, y]).code != edge_code {
                    report.fail(format!("pair ({x},{y}) at distance s has another type"));
                }
                edges.push((x, y, 1));
            }
        }
    }
    let g = OrbitGraph::from_edges(big.size(), &edges);

    let mut out = Vec::new();
    let mut fit = Vec::new();
    for (y, z, n, _) in &paths {
        let r = rho(&g, &[*y], &[*z])?;
        let d = d2[*y][*z];
        out.push(QiSample { y: *y, z: *z, d, rho: r, witness_len: *n });
        match r {
            ExtNat::Infinite => report.fail(format!("({y},{z}) at distance {d}: rho infinite")),
            ExtNat::Finite(v) => {
                let scaled = s * v as i64;
                if scaled < d || scaled > d + s * 2 {
                    report.fail(format!("({y},{z}) at distance {d}: rho {v} outside [d/s, d/s + 2]"));
                }
                fit.push((d, Ratio::from_integer(v as i64)));
            }
        }
    }
    report.note(format!("samples: {}", out.len()));
    if !fit.is_empty() {
        let scaled: Vec<(Q, Q)> = fit.iter().map(|(d, r)| (*d, *r)).collect();
        let (k, c) = qi_fit(&scaled)?;
        report.context("fit_K", k).context("fit_C", c);
    }
    Ok((report, out))
}
