//! Counting small subgraphs of a mask graph.
//!
//! The distinguishing power of the degree-3 and degree-4 statistics is
//! governed by how many copies of a handful of small patterns the mask
//! contains: paths, stars, triangles, 4-cycles, complete bipartite blocks,
//! and the "doubled" shapes obtained by overlapping two triangles or two
//! 4-cycles. Every count here is a *subgraph* count: the number of distinct
//! edge subsets of `G` forming the pattern (not induced, not homomorphism).
//!
//! Each pattern has a closed-form or near-closed-form counting routine used
//! by [`count`]/[`census`], and an independent [`brute_force_count`] oracle
//! that enumerates embeddings directly and deduplicates edge sets; the two
//! are checked against each other exhaustively in the tests.

use std::collections::{HashMap, HashSet};

use serde_json::{json, Value};
use thiserror::Error;

use crate::graphs::Graph;

/// Errors from census operations.
#[derive(Debug, Error)]
pub enum CensusError {
    #[error("oriented counts require a bipartitioned graph")]
    NotOriented,
    #[error("pattern parameter must be at least 1, got {0}")]
    BadParameter(u32),
    #[error("brute-force counting supports at most {max} vertices, got {got}")]
    TooLarge { max: usize, got: usize },
}

/// Unoriented patterns. `PK` denotes the path with `K` edges, `CK` the cycle
/// with `K` edges, and `XTwoE`/`XTwoV`/`XTwoEv` the unions of two copies of
/// `X` overlapping in an edge, a single vertex, or an edge plus one more
/// vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlainPattern {
    /// A single edge.
    Edge,
    /// The path with two edges (a wedge).
    P2,
    /// The path with three edges.
    P3,
    /// The path with four edges.
    P4,
    /// The triangle.
    C3,
    /// The 4-cycle.
    C4,
    /// A triangle with a pendant edge.
    C3Plus,
    /// A claw with a pendant edge at one leaf (the spider S(2,1,1)).
    K13Plus,
    /// The complete graph on four vertices.
    K4,
    /// The complete bipartite graph K_{2,3}.
    K23,
    /// The complete bipartite graph K_{2,4}.
    K24,
    /// The star K_{1,k}.
    Star(u32),
    /// Two triangles sharing an edge (the diamond).
    C3TwoE,
    /// Two triangles sharing exactly one vertex (the bowtie).
    C3TwoV,
    /// Two 4-cycles sharing exactly one edge (the domino).
    C4TwoE,
    /// Two 4-cycles sharing exactly one vertex.
    C4TwoV,
    /// Two 4-cycles sharing an edge and one further vertex.
    C4TwoEv,
}

/// Patterns counted with a prescribed bipartite placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrientedPattern {
    /// The star K_{1,k} with its center in the left class.
    Star(u32),
    /// Complete bipartite K_{r,s} with the r-class inside the left class.
    CompleteBipartite { left: u32, right: u32 },
    /// The path with four edges whose two-vertex color class lies in the
    /// left class (so both endpoints are on the right).
    P4,
}

/// Any pattern, oriented or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    Plain(PlainPattern),
    Oriented(OrientedPattern),
}

impl From<PlainPattern> for Pattern {
    fn from(p: PlainPattern) -> Self {
        Pattern::Plain(p)
    }
}

impl From<OrientedPattern> for Pattern {
    fn from(p: OrientedPattern) -> Self {
        Pattern::Oriented(p)
    }
}

fn cadd(a: u128, b: u128) -> u128 {
    a.checked_add(b).expect("subgraph count overflows u128")
}

fn cmul(a: u128, b: u128) -> u128 {
    a.checked_mul(b).expect("subgraph count overflows u128")
}

/// C(x, 2) with overflow checks.
fn choose2(x: u128) -> u128 {
    cmul(x, x.saturating_sub(1)) / 2
}

/// C(x, k) with overflow checks (exact at every step).
fn choose(x: u128, k: u32) -> u128 {
    let k = k as u128;
    if k > x {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k {
        r = cmul(r, x - i) / (i + 1);
    }
    r
}

fn adj(g: &Graph, v: u32) -> &[u32] {
    g.neighbors(v).expect("vertex label is valid by construction")
}

fn degrees(g: &Graph) -> Vec<u64> {
    (0..g.n_vertices() as u32)
        .map(|v| adj(g, v).len() as u64)
        .collect()
}

/// Sorted-merge intersection size of two neighbor lists.
fn common_count(g: &Graph, u: u32, w: u32) -> u64 {
    let (a, b) = (adj(g, u), adj(g, w));
    let (mut i, mut j, mut c) = (0usize, 0usize, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Sorted-merge intersection of two neighbor lists.
fn common_list(g: &Graph, u: u32, w: u32) -> Vec<u32> {
    let (a, b) = (adj(g, u), adj(g, w));
    let mut out = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Number of triangles through each edge (= shared degree of its endpoints).
fn edge_triangle_counts(g: &Graph) -> Vec<u64> {
    g.edges()
        .iter()
        .map(|&(u, v)| common_count(g, u, v))
        .collect()
}

/// Number of triangles through each vertex.
fn vertex_triangle_counts(g: &Graph, t_e: &[u64]) -> Vec<u64> {
    let mut acc = vec![0u64; g.n_vertices()];
    for (idx, &(u, v)) in g.edges().iter().enumerate() {
        acc[u as usize] += t_e[idx];
        acc[v as usize] += t_e[idx];
    }
    // Each triangle at v contributes to two of v's edges.
    for x in &mut acc {
        debug_assert!(*x % 2 == 0);
        *x /= 2;
    }
    acc
}

/// Shared-neighbor data for all vertex pairs with at least one common
/// neighbor, plus the aggregates that fall out of the same scan.
struct PairScan {
    /// `cd(u, w)` keyed by `(min, max)`; only pairs with `cd > 0`.
    cd: HashMap<(u32, u32), u64>,
    /// `sum over pairs of C(cd, 2)` = twice the number of 4-cycles.
    sum_choose2: u128,
    /// K_{2,3} count: `sum over pairs of C(cd, 3)`.
    k23: u128,
    /// K_{2,4} count: `sum over pairs of C(cd, 4)`.
    k24: u128,
    /// 4-cycles through each vertex (each cycle hits 4 vertices, as two
    /// diagonal pairs).
    c4_v: Vec<u128>,
    /// K_{2,4} count restricted to pairs inside the left class.
    onum_k24: u128,
}

fn pair_scan(g: &Graph) -> PairScan {
    let n = g.n_vertices();
    let mut cnt = vec![0u32; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut cd = HashMap::new();
    let mut sum_choose2 = 0u128;
    let mut k23 = 0u128;
    let mut k24 = 0u128;
    let mut onum_k24 = 0u128;
    let mut c4_v = vec![0u128; n];
    let orientation = g.orientation();

    for u in 0..n as u32 {
        for &v in adj(g, u) {
            for &w in adj(g, v) {
                if w > u {
                    if cnt[w as usize] == 0 {
                        touched.push(w);
                    }
                    cnt[w as usize] += 1;
                }
            }
        }
        for &w in &touched {
            let c = cnt[w as usize] as u64;
            cnt[w as usize] = 0;
            cd.insert((u, w), c);
            let c2 = choose2(c as u128);
            sum_choose2 = cadd(sum_choose2, c2);
            k23 = cadd(k23, choose(c as u128, 3));
            let c4 = choose(c as u128, 4);
            k24 = cadd(k24, c4);
            if let Some(o) = orientation {
                if o.is_left(u) && o.is_left(w) {
                    onum_k24 = cadd(onum_k24, c4);
                }
            }
            c4_v[u as usize] = cadd(c4_v[u as usize], c2);
            c4_v[w as usize] = cadd(c4_v[w as usize], c2);
        }
        touched.clear();
    }

    PairScan {
        cd,
        sum_choose2,
        k23,
        k24,
        c4_v,
        onum_k24,
    }
}

fn get_cd(map: &HashMap<(u32, u32), u64>, u: u32, w: u32) -> u64 {
    let key = (u.min(w), u.max(w));
    map.get(&key).copied().unwrap_or(0)
}

/// Number of 4-cycles through each edge.
fn edge_c4_counts(g: &Graph, cd: &HashMap<(u32, u32), u64>) -> Vec<u64> {
    g.edges()
        .iter()
        .map(|&(a, b)| {
            // Cycles a-b-y-x-a: y runs over N(b) minus a; x over common
            // neighbors of a and y other than b (b is always one).
            adj(g, b)
                .iter()
                .filter(|&&y| y != a)
                .map(|&y| get_cd(cd, a, y) - 1)
                .sum()
        })
        .collect()
}

/// Per-edge pass for the three shapes built from 4-cycles overlapping in an
/// edge, and for K4 (needed to close the inclusion-exclusion).
struct EdgeShapes {
    c4_2e: u128,
    c4_2ev: u128,
    k4: u128,
}

fn edge_shape_pass(g: &Graph, cd: &HashMap<(u32, u32), u64>, q: &[u64]) -> EdgeShapes {
    let mut c4_2e = 0u128;
    let mut c4_2ev = 0u128;
    let mut k4_times_6 = 0u128;
    for (idx, &(a, b)) in g.edges().iter().enumerate() {
        let common = common_list(g, a, b);

        // Pairs of 4-cycles sharing the edge ab and the off-edge vertex w:
        // one cycle a-b-w-x (x a common neighbor of a, w besides b), the
        // other b-a-w-y; exclude x = y, which closes a K4 instead.
        let mut pev = 0u128;
        for &w in &common {
            let both = common.iter().filter(|&&x| g.adjacent(x, w)).count() as u128;
            let left = (get_cd(cd, a, w) - 1) as u128;
            let right = (get_cd(cd, b, w) - 1) as u128;
            pev = cadd(pev, cmul(left, right) - both);
        }

        // Pairs of 4-cycles sharing the path a-b-w (resp. w-a-b).
        let mut b1 = 0u128;
        for &w in adj(g, b).iter().filter(|&&w| w != a) {
            b1 = cadd(b1, choose2((get_cd(cd, a, w) - 1) as u128));
        }
        let mut b2 = 0u128;
        for &w in adj(g, a).iter().filter(|&&w| w != b) {
            b2 = cadd(b2, choose2((get_cd(cd, b, w) - 1) as u128));
        }

        // Edges inside the common neighborhood close a K4 over ab.
        let mut k4e = 0u128;
        for (i, &x) in common.iter().enumerate() {
            for &y in &common[i + 1..] {
                if g.adjacent(x, y) {
                    k4e += 1;
                }
            }
        }

        // All pairs of distinct 4-cycles through ab, minus those sharing
        // anything beyond the edge itself, leaves the domino pairs.
        let pairs = choose2(q[idx] as u128);
        let overlap = cadd(cadd(pev, b1), cadd(b2, k4e));
        c4_2e = cadd(
            c4_2e,
            pairs
                .checked_sub(overlap)
                .expect("4-cycle pair classification must not exceed total pairs"),
        );
        c4_2ev = cadd(c4_2ev, pev);
        k4_times_6 = cadd(k4_times_6, k4e);
    }
    EdgeShapes {
        c4_2e,
        c4_2ev,
        k4: k4_times_6 / 6,
    }
}

/// Pairs of 4-cycles sharing exactly one vertex, by inclusion-exclusion over
/// the number of shared vertices.
fn c4_two_v(
    g: &Graph,
    scan: &PairScan,
    t_e: &[u64],
    q: &[u64],
    num_k4: u128,
) -> u128 {
    let to_i = |x: u128| i128::try_from(x).expect("subgraph count overflows i128");

    // S1: over single vertices.
    let mut s1 = 0i128;
    for &c in &scan.c4_v {
        s1 = s1
            .checked_add(to_i(choose2(c)))
            .expect("subgraph count overflows i128");
    }

    // S2: over vertex pairs. A pair rides a cycle either as a diagonal
    // (C(cd,2) ways) or as an edge of the cycle (q ways, if adjacent).
    let mut s2 = 0i128;
    for (&(u, w), &c) in &scan.cd {
        let mut through = choose2(c as u128);
        if let Some(idx) = g.edge_index(u, w) {
            through = cadd(through, q[idx] as u128);
        }
        s2 += to_i(choose2(through));
    }
    for (idx, _) in g.edges().iter().enumerate() {
        if t_e[idx] == 0 {
            // Adjacent pairs with no common neighbor are absent from the
            // scan map but can still ride cycles through their edge.
            s2 += to_i(choose2(q[idx] as u128));
        }
    }

    // S3: over vertex triples. In a 4-cycle, any in-cycle triple is a wedge
    // x-y-z whose closing pair (x, z) is a diagonal; the fourth vertex is
    // any other common neighbor of x and z.
    let mut triples: HashMap<[u32; 3], u64> = HashMap::new();
    for y in 0..g.n_vertices() as u32 {
        let nb = adj(g, y);
        for (i, &x) in nb.iter().enumerate() {
            for &z in &nb[i + 1..] {
                let extra = get_cd(&scan.cd, x, z) - 1;
                if extra > 0 {
                    let mut key = [x, y, z];
                    key.sort_unstable();
                    *triples.entry(key).or_insert(0) += extra;
                }
            }
        }
    }
    let mut s3 = 0i128;
    for &c in triples.values() {
        s3 += to_i(choose2(c as u128));
    }

    // S4: over vertex 4-sets; only K4s carry more than one cycle (three).
    let s4 = 3i128 * to_i(num_k4);

    let n1 = s1 - 2 * s2 + 3 * s3 - 4 * s4;
    assert!(n1 >= 0, "inclusion-exclusion for C4TwoV went negative");
    n1 as u128
}

/// Triangles with a pendant edge.
fn c3_plus(g: &Graph, deg: &[u64], t_v: &[u64]) -> u128 {
    let mut total = 0u128;
    for v in 0..g.n_vertices() {
        if t_v[v] > 0 {
            total = cadd(total, cmul(t_v[v] as u128, (deg[v] - 2) as u128));
        }
    }
    total
}

/// Claws with a pendant edge at one leaf: choose the ordered edge
/// (center, tailed leaf), the tail, and the two remaining leaves; subtract
/// the selections where the tail collides with a leaf.
fn k13_plus(g: &Graph, deg: &[u64], t_e: &[u64]) -> u128 {
    let mut total = 0u128;
    for (idx, &(u, v)) in g.edges().iter().enumerate() {
        for (c, a) in [(u, v), (v, u)] {
            let dc = deg[c as usize];
            let da = deg[a as usize];
            if dc < 3 || da < 2 {
                continue;
            }
            let all = cmul(choose2((dc - 1) as u128), (da - 1) as u128);
            let bad = cmul(t_e[idx] as u128, (dc - 2) as u128);
            total = cadd(
                total,
                all.checked_sub(bad)
                    .expect("pendant-claw correction must not exceed total"),
            );
        }
    }
    total
}

/// Paths with three edges: choose the middle edge and one further neighbor
/// at each end, excluding the closures that coincide.
fn p3_count(g: &Graph, deg: &[u64], t_e: &[u64]) -> u128 {
    let mut total = 0u128;
    for (idx, &(u, v)) in g.edges().iter().enumerate() {
        let ways = cmul((deg[u as usize] - 1) as u128, (deg[v as usize] - 1) as u128);
        total = cadd(
            total,
            ways.checked_sub(t_e[idx] as u128)
                .expect("triangle closures must not exceed wedge extensions"),
        );
    }
    total
}

/// Paths with four edges: choose the center and its two cycle-free wings.
fn p4_count(g: &Graph, deg: &[u64], cd: &HashMap<(u32, u32), u64>) -> u128 {
    let mut total = 0u128;
    for c in 0..g.n_vertices() as u32 {
        let nb = adj(g, c);
        for (i, &x) in nb.iter().enumerate() {
            for &z in &nb[i + 1..] {
                let a = u64::from(g.adjacent(x, z));
                let ends_x = deg[x as usize] - 1 - a;
                let ends_z = deg[z as usize] - 1 - a;
                let coincide = (get_cd(cd, x, z) - 1) as u128;
                let term = cmul(ends_x as u128, ends_z as u128)
                    .checked_sub(coincide)
                    .expect("coinciding ends must not exceed end choices");
                total = cadd(total, term);
            }
        }
    }
    total
}

/// Oriented complete bipartite count via pruned enumeration of the left
/// class subsets.
fn oriented_complete_bipartite(g: &Graph, r: u32, s: u32) -> Result<u128, CensusError> {
    let o = g.orientation().ok_or(CensusError::NotOriented)?;
    if r == 0 || s == 0 {
        return Err(CensusError::BadParameter(0));
    }
    let left = o.left();
    fn recurse(
        g: &Graph,
        left: &[u32],
        start: usize,
        remaining: u32,
        common: &[u32],
        s: u32,
        total: &mut u128,
    ) {
        if (common.len() as u128) < s as u128 {
            return;
        }
        if remaining == 0 {
            *total = cadd(*total, choose(common.len() as u128, s));
            return;
        }
        for i in start..left.len() {
            let v = left[i];
            let next: Vec<u32> = common
                .iter()
                .copied()
                .filter(|&w| g.adjacent(v, w))
                .collect();
            recurse(g, left, i + 1, remaining - 1, &next, s, total);
        }
    }
    let mut total = 0u128;
    for i in 0..left.len() {
        let first = adj(g, left[i]).to_vec();
        recurse(g, left, i + 1, r - 1, &first, s, &mut total);
    }
    Ok(total)
}

/// Oriented 4-edge path count (two-vertex class on the left): choose the
/// middle right vertex and a pair of left wings, then distinct right ends.
fn oriented_p4(g: &Graph, deg: &[u64], cd: &HashMap<(u32, u32), u64>) -> Result<u128, CensusError> {
    let o = g.orientation().ok_or(CensusError::NotOriented)?;
    let mut total = 0u128;
    for &r in o.right() {
        let nb = adj(g, r);
        for (i, &l1) in nb.iter().enumerate() {
            for &l2 in &nb[i + 1..] {
                let ways = cmul(
                    (deg[l1 as usize] - 1) as u128,
                    (deg[l2 as usize] - 1) as u128,
                );
                let coincide = (get_cd(cd, l1, l2) - 1) as u128;
                total = cadd(
                    total,
                    ways.checked_sub(coincide)
                        .expect("coinciding ends must not exceed end choices"),
                );
            }
        }
    }
    Ok(total)
}

/// Counts copies of an unoriented pattern using the closed-form routines.
pub fn count(g: &Graph, pattern: PlainPattern) -> Result<u128, CensusError> {
    use PlainPattern::*;
    Ok(match pattern {
        Edge => g.n_edges() as u128,
        Star(k) => {
            if k == 0 {
                return Err(CensusError::BadParameter(0));
            }
            let mut total = 0u128;
            for d in degrees(g) {
                total = cadd(total, choose(d as u128, k));
            }
            total
        }
        P2 => {
            let mut total = 0u128;
            for d in degrees(g) {
                total = cadd(total, choose2(d as u128));
            }
            total
        }
        C3 => {
            let t_e = edge_triangle_counts(g);
            t_e.iter().map(|&t| t as u128).fold(0u128, cadd) / 3
        }
        C3TwoE => {
            let t_e = edge_triangle_counts(g);
            t_e.iter()
                .map(|&t| choose2(t as u128))
                .fold(0u128, cadd)
        }
        C3TwoV => {
            let t_e = edge_triangle_counts(g);
            let t_v = vertex_triangle_counts(g, &t_e);
            let shared_edge_pairs = t_e
                .iter()
                .map(|&t| choose2(t as u128))
                .fold(0u128, cadd);
            let at_vertex = t_v
                .iter()
                .map(|&t| choose2(t as u128))
                .fold(0u128, cadd);
            at_vertex
                .checked_sub(cmul(2, shared_edge_pairs))
                .expect("edge-sharing triangle pairs exceed vertex-sharing pairs")
        }
        C3Plus => {
            let deg = degrees(g);
            let t_e = edge_triangle_counts(g);
            let t_v = vertex_triangle_counts(g, &t_e);
            c3_plus(g, &deg, &t_v)
        }
        K13Plus => {
            let deg = degrees(g);
            let t_e = edge_triangle_counts(g);
            k13_plus(g, &deg, &t_e)
        }
        P3 => {
            let deg = degrees(g);
            let t_e = edge_triangle_counts(g);
            p3_count(g, &deg, &t_e)
        }
        P4 => {
            let deg = degrees(g);
            let scan = pair_scan(g);
            p4_count(g, &deg, &scan.cd)
        }
        C4 => pair_scan(g).sum_choose2 / 2,
        K23 => pair_scan(g).k23,
        K24 => pair_scan(g).k24,
        K4 => {
            let scan = pair_scan(g);
            let q = edge_c4_counts(g, &scan.cd);
            edge_shape_pass(g, &scan.cd, &q).k4
        }
        C4TwoE => {
            let scan = pair_scan(g);
            let q = edge_c4_counts(g, &scan.cd);
            edge_shape_pass(g, &scan.cd, &q).c4_2e
        }
        C4TwoEv => {
            let scan = pair_scan(g);
            let q = edge_c4_counts(g, &scan.cd);
            edge_shape_pass(g, &scan.cd, &q).c4_2ev
        }
        C4TwoV => {
            let scan = pair_scan(g);
            let t_e = edge_triangle_counts(g);
            let q = edge_c4_counts(g, &scan.cd);
            let shapes = edge_shape_pass(g, &scan.cd, &q);
            c4_two_v(g, &scan, &t_e, &q, shapes.k4)
        }
    })
}

/// Counts copies of an oriented pattern; the graph must carry a bipartition.
pub fn oriented_count(g: &Graph, pattern: OrientedPattern) -> Result<u128, CensusError> {
    let o = g.orientation().ok_or(CensusError::NotOriented)?;
    match pattern {
        OrientedPattern::Star(k) => {
            if k == 0 {
                return Err(CensusError::BadParameter(0));
            }
            let mut total = 0u128;
            for &v in o.left() {
                total = cadd(total, choose(adj(g, v).len() as u128, k));
            }
            Ok(total)
        }
        OrientedPattern::CompleteBipartite { left, right } => {
            oriented_complete_bipartite(g, left, right)
        }
        OrientedPattern::P4 => {
            let deg = degrees(g);
            let scan = pair_scan(g);
            oriented_p4(g, &deg, &scan.cd)
        }
    }
}

/// Dispatches [`count`] or [`oriented_count`] on a combined pattern.
pub fn count_pattern(g: &Graph, pattern: Pattern) -> Result<u128, CensusError> {
    match pattern {
        Pattern::Plain(p) => count(g, p),
        Pattern::Oriented(p) => oriented_count(g, p),
    }
}

/// The full set of counts consumed by the moment formulas and tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgraphCensus {
    pub num_e: u128,
    pub num_p2: u128,
    pub num_c3: u128,
    pub num_c4: u128,
    pub num_k13: u128,
    pub num_k14: u128,
    pub num_k18: u128,
    pub num_k24: u128,
    pub num_c3_2e: u128,
    pub num_c3_2v: u128,
    pub num_c4_2e: u128,
    pub num_c4_2v: u128,
    /// Present when the graph carries a bipartition.
    pub oriented: Option<OrientedCensus>,
}

/// Oriented counts for bipartite masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedCensus {
    pub onum_k13: u128,
    pub onum_k14: u128,
    pub onum_k24: u128,
    pub onum_p4: u128,
}

fn count_to_json(x: u128) -> Value {
    match u64::try_from(x) {
        Ok(v) => json!(v),
        Err(_) => json!(x.to_string()),
    }
}

impl SubgraphCensus {
    /// Flat JSON object; counts exceeding `u64` render as decimal strings.
    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        for (key, val) in [
            ("num_e", self.num_e),
            ("num_p2", self.num_p2),
            ("num_c3", self.num_c3),
            ("num_c4", self.num_c4),
            ("num_k13", self.num_k13),
            ("num_k14", self.num_k14),
            ("num_k18", self.num_k18),
            ("num_k24", self.num_k24),
            ("num_c3_2e", self.num_c3_2e),
            ("num_c3_2v", self.num_c3_2v),
            ("num_c4_2e", self.num_c4_2e),
            ("num_c4_2v", self.num_c4_2v),
        ] {
            obj.insert(key.to_string(), count_to_json(val));
        }
        if let Some(o) = &self.oriented {
            for (key, val) in [
                ("onum_k13", o.onum_k13),
                ("onum_k14", o.onum_k14),
                ("onum_k24", o.onum_k24),
                ("onum_p4", o.onum_p4),
            ] {
                obj.insert(key.to_string(), count_to_json(val));
            }
        }
        Value::Object(obj)
    }
}

/// Computes every census field, sharing the scans across patterns.
pub fn census(g: &Graph) -> SubgraphCensus {
    let deg = degrees(g);
    let t_e = edge_triangle_counts(g);
    let t_v = vertex_triangle_counts(g, &t_e);
    let scan = pair_scan(g);
    let q = edge_c4_counts(g, &scan.cd);
    let shapes = edge_shape_pass(g, &scan.cd, &q);

    let sum_te: u128 = t_e.iter().map(|&t| t as u128).fold(0u128, cadd);
    let num_c3 = sum_te / 3;
    let num_c3_2e: u128 = t_e
        .iter()
        .map(|&t| choose2(t as u128))
        .fold(0u128, cadd);
    let at_vertex: u128 = t_v
        .iter()
        .map(|&t| choose2(t as u128))
        .fold(0u128, cadd);
    let num_c3_2v = at_vertex
        .checked_sub(cmul(2, num_c3_2e))
        .expect("edge-sharing triangle pairs exceed vertex-sharing pairs");

    let stars = |k: u32| -> u128 {
        deg.iter()
            .map(|&d| choose(d as u128, k))
            .fold(0u128, cadd)
    };

    let oriented = g.orientation().map(|o| {
        let left_stars = |k: u32| -> u128 {
            o.left()
                .iter()
                .map(|&v| choose(deg[v as usize] as u128, k))
                .fold(0u128, cadd)
        };
        OrientedCensus {
            onum_k13: left_stars(3),
            onum_k14: left_stars(4),
            onum_k24: scan.onum_k24,
            onum_p4: oriented_p4(g, &deg, &scan.cd)
                .expect("orientation checked above"),
        }
    });

    SubgraphCensus {
        num_e: g.n_edges() as u128,
        num_p2: stars(2),
        num_c3,
        num_c4: scan.sum_choose2 / 2,
        num_k13: stars(3),
        num_k14: stars(4),
        num_k18: stars(8),
        num_k24: scan.k24,
        num_c3_2e,
        num_c3_2v,
        num_c4_2e: shapes.c4_2e,
        num_c4_2v: c4_two_v(g, &scan, &t_e, &q, shapes.k4),
        oriented,
    }
}

/// Pattern template: vertex count, edges, and (for oriented patterns) the
/// required side of each vertex (`true` = left).
struct Template {
    k: usize,
    edges: Vec<(u8, u8)>,
    sides: Option<Vec<bool>>,
}

fn plain_template(pattern: PlainPattern) -> Result<Template, CensusError> {
    use PlainPattern::*;
    let (k, edges) = match pattern {
        Edge => (2, vec![(0, 1)]),
        P2 => (3, vec![(0, 1), (1, 2)]),
        P3 => (4, vec![(0, 1), (1, 2), (2, 3)]),
        P4 => (5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]),
        C3 => (3, vec![(0, 1), (1, 2), (2, 0)]),
        C4 => (4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]),
        C3Plus => (4, vec![(0, 1), (1, 2), (2, 0), (0, 3)]),
        K13Plus => (5, vec![(0, 1), (0, 2), (0, 3), (1, 4)]),
        K4 => (4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
        K23 => (
            5,
            vec![(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)],
        ),
        K24 => (
            6,
            vec![
                (0, 2),
                (0, 3),
                (0, 4),
                (0, 5),
                (1, 2),
                (1, 3),
                (1, 4),
                (1, 5),
            ],
        ),
        Star(k) => {
            if k == 0 {
                return Err(CensusError::BadParameter(0));
            }
            let k = k as usize;
            (k + 1, (1..=k).map(|i| (0u8, i as u8)).collect())
        }
        C3TwoE => (4, vec![(0, 1), (0, 2), (1, 2), (0, 3), (1, 3)]),
        C3TwoV => (
            5,
            vec![(0, 1), (0, 2), (1, 2), (0, 3), (0, 4), (3, 4)],
        ),
        C4TwoE => (
            6,
            vec![
                (0, 1),
                (1, 2),
                (2, 3),
                (0, 3),
                (1, 4),
                (4, 5),
                (0, 5),
            ],
        ),
        C4TwoV => (
            7,
            vec![
                (0, 1),
                (1, 2),
                (2, 3),
                (0, 3),
                (0, 4),
                (4, 5),
                (5, 6),
                (0, 6),
            ],
        ),
        C4TwoEv => (
            5,
            vec![(0, 1), (1, 2), (2, 3), (0, 3), (0, 2), (2, 4), (1, 4)],
        ),
    };
    Ok(Template {
        k,
        edges,
        sides: None,
    })
}

fn oriented_template(pattern: OrientedPattern) -> Result<Template, CensusError> {
    match pattern {
        OrientedPattern::Star(k) => {
            if k == 0 {
                return Err(CensusError::BadParameter(0));
            }
            let k = k as usize;
            let mut sides = vec![false; k + 1];
            sides[0] = true;
            Ok(Template {
                k: k + 1,
                edges: (1..=k).map(|i| (0u8, i as u8)).collect(),
                sides: Some(sides),
            })
        }
        OrientedPattern::CompleteBipartite { left, right } => {
            if left == 0 || right == 0 {
                return Err(CensusError::BadParameter(0));
            }
            let (r, s) = (left as usize, right as usize);
            let mut edges = Vec::new();
            for i in 0..r {
                for j in 0..s {
                    edges.push((i as u8, (r + j) as u8));
                }
            }
            let mut sides = vec![false; r + s];
            for side in sides.iter_mut().take(r) {
                *side = true;
            }
            Ok(Template {
                k: r + s,
                edges,
                sides: Some(sides),
            })
        }
        OrientedPattern::P4 => Ok(Template {
            // Path r1-l1-r2-l2-r3; the two-vertex class {l1, l2} is left.
            k: 5,
            edges: vec![(0, 1), (1, 2), (2, 3), (3, 4)],
            sides: Some(vec![false, true, false, true, false]),
        }),
    }
}

const BRUTE_FORCE_MAX_VERTICES: usize = 16;

/// Independent oracle: enumerates all embeddings of the pattern by
/// backtracking and counts distinct image edge sets.
pub fn brute_force_count(g: &Graph, pattern: Pattern) -> Result<u128, CensusError> {
    let n = g.n_vertices();
    if n > BRUTE_FORCE_MAX_VERTICES {
        return Err(CensusError::TooLarge {
            max: BRUTE_FORCE_MAX_VERTICES,
            got: n,
        });
    }
    let template = match pattern {
        Pattern::Plain(p) => plain_template(p)?,
        Pattern::Oriented(p) => {
            if g.orientation().is_none() {
                return Err(CensusError::NotOriented);
            }
            oriented_template(p)?
        }
    };
    if template.k > n {
        return Ok(0);
    }

    // Edge bitmask rank for a pair u < v in a graph on n vertices.
    let rank = |u: u32, v: u32| -> u32 {
        let (u, v) = (u.min(v), u.max(v));
        let n = n as u32;
        u * (2 * n - u - 1) / 2 + (v - u - 1)
    };

    let mut seen: HashSet<u128> = HashSet::new();
    let mut assignment: Vec<u32> = Vec::with_capacity(template.k);
    let mut used = vec![false; n];

    // Pattern edges incident to vertex i with both endpoints <= i, so the
    // adjacency constraint can be checked as soon as i is placed.
    let mut incoming: Vec<Vec<u8>> = vec![Vec::new(); template.k];
    for &(a, b) in &template.edges {
        let (lo, hi) = (a.min(b), a.max(b));
        incoming[hi as usize].push(lo);
    }

    fn backtrack(
        g: &Graph,
        template: &Template,
        incoming: &[Vec<u8>],
        rank: &dyn Fn(u32, u32) -> u32,
        assignment: &mut Vec<u32>,
        used: &mut [bool],
        seen: &mut HashSet<u128>,
    ) {
        let i = assignment.len();
        if i == template.k {
            let mut mask = 0u128;
            for &(a, b) in &template.edges {
                mask |= 1u128 << rank(assignment[a as usize], assignment[b as usize]);
            }
            seen.insert(mask);
            return;
        }
        for c in 0..g.n_vertices() as u32 {
            if used[c as usize] {
                continue;
            }
            if let Some(sides) = &template.sides {
                let o = g.orientation().expect("checked before backtracking");
                if o.is_left(c) != sides[i] {
                    continue;
                }
            }
            if incoming[i]
                .iter()
                .any(|&j| !g.adjacent(assignment[j as usize], c))
            {
                continue;
            }
            used[c as usize] = true;
            assignment.push(c);
            backtrack(g, template, incoming, rank, assignment, used, seen);
            assignment.pop();
            used[c as usize] = false;
        }
    }

    backtrack(
        g,
        &template,
        &incoming,
        &rank,
        &mut assignment,
        &mut used,
        &mut seen,
    );
    Ok(seen.len() as u128)
}
