//! Brute-force oracles shared by the integration and acceptance tests. Each
//! is written from the definition, without reusing library code paths.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use topiknet_core::corpus::ArticleRecord;
use topiknet_core::graph::WeightedGraph;
use topiknet_core::seed::rng_from_seed;
use topiknet_core::YearMonth;

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn pearson_bool(x: &[bool], y: &[bool]) -> f64 {
    let f = |v: &[bool]| v.iter().map(|&b| f64::from(u8::from(b))).collect::<Vec<_>>();
    pearson(&f(x), &f(y))
}

/// Average ranks, 1-based.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman_rho(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Upper chi-square tail at one degree of freedom: `erfc(sqrt(x / 2))`.
pub fn chi2_df1_sf(x: f64) -> f64 {
    statrs::function::erf::erfc((x / 2.0).sqrt())
}

/// Dense weights as nested vectors, for readability in the oracles.
pub fn dense(g: &WeightedGraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    (0..n).map(|i| (0..n).map(|j| g.weight(i, j)).collect()).collect()
}

/// Floyd–Warshall on `1 / w`.
pub fn floyd_distances(g: &WeightedGraph) -> Vec<Vec<f64>> {
    let w = dense(g);
    let n = w.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        for j in 0..n {
            if i != j && w[i][j] > 0.0 {
                d[i][j] = 1.0 / w[i][j];
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn simple_paths(w: &[Vec<f64>], s: usize, t: usize) -> Vec<(f64, Vec<usize>)> {
    fn walk(
        w: &[Vec<f64>],
        at: usize,
        t: usize,
        len: f64,
        path: &mut Vec<usize>,
        on: &mut Vec<bool>,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        if at == t {
            out.push((len, path.clone()));
            return;
        }
        for next in 0..w.len() {
            if w[at][next] > 0.0 && !on[next] {
                on[next] = true;
                path.push(next);
                walk(w, next, t, len + 1.0 / w[at][next], path, on, out);
                path.pop();
                on[next] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut on = vec![false; w.len()];
    on[s] = true;
    walk(w, s, t, 0.0, &mut vec![s], &mut on, &mut out);
    out
}

/// Betweenness by enumerating every simple path between every ordered pair,
/// keeping the shortest (lengths equal within `rel_tol`), normalized by
/// `(n-1)(n-2)`.
pub fn brute_betweenness(g: &WeightedGraph, rel_tol: f64) -> Vec<f64> {
    let w = dense(g);
    let n = w.len();
    let mut bc = vec![0.0; n];
    if n < 3 {
        return bc;
    }
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let paths = simple_paths(&w, s, t);
            let Some(best) = paths.iter().map(|p| p.0).reduce(f64::min) else {
                continue;
            };
            let shortest: Vec<&Vec<usize>> = paths
                .iter()
                .filter(|p| p.0 - best <= rel_tol * best.max(p.0))
                .map(|p| &p.1)
                .collect();
            let total = shortest.len() as f64;
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = shortest.iter().filter(|p| p.contains(&v)).count() as f64;
                bc[v] += through / total;
            }
        }
    }
    let norm = ((n - 1) * (n - 2)) as f64;
    bc.iter().map(|b| b / norm).collect()
}

/// Barrat clustering from the triple-sum definition.
pub fn brute_clustering(g: &WeightedGraph) -> Vec<f64> {
    let w = dense(g);
    let n = w.len();
    (0..n)
        .map(|i| {
            let k = (0..n).filter(|&j| w[i][j] > 0.0).count();
            let s: f64 = w[i].iter().sum();
            if k < 2 {
                return 0.0;
            }
            let mut total = 0.0;
            for j in 0..n {
                for h in 0..n {
                    if j != h && w[i][j] > 0.0 && w[i][h] > 0.0 && w[j][h] > 0.0 {
                        total += (w[i][j] + w[i][h]) / 2.0;
                    }
                }
            }
            total / (s * (k as f64 - 1.0))
        })
        .collect()
}

pub fn brute_participation(g: &WeightedGraph, labels: &[usize]) -> Vec<f64> {
    let w = dense(g);
    let n = w.len();
    (0..n)
        .map(|i| {
            let s: f64 = w[i].iter().sum();
            if s == 0.0 {
                return 0.0;
            }
            let mut by_module: HashMap<usize, f64> = HashMap::new();
            for j in 0..n {
                *by_module.entry(labels[j]).or_default() += w[i][j];
            }
            1.0 - by_module.values().map(|x| (x / s) * (x / s)).sum::<f64>()
        })
        .collect()
}

pub fn brute_modularity(g: &WeightedGraph, labels: &[usize], gamma: f64) -> f64 {
    let w = dense(g);
    let n = w.len();
    let s: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let l: f64 = s.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += w[i][j] - gamma * s[i] * s[j] / l;
            }
        }
    }
    q / l
}

/// NMI from the joint label distribution.
pub fn nmi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pa: HashMap<usize, f64> = HashMap::new();
    let mut pb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0 / n;
        *pa.entry(x).or_default() += 1.0 / n;
        *pb.entry(y).or_default() += 1.0 / n;
    }
    let h = |m: &HashMap<usize, f64>| -m.values().map(|p| p * p.ln()).sum::<f64>();
    let (ha, hb) = (h(&pa), h(&pb));
    if ha + hb == 0.0 {
        return 1.0;
    }
    let mi: f64 = joint.iter().map(|(&(x, y), &p)| p * (p / (pa[&x] * pb[&y])).ln()).sum();
    2.0 * mi / (ha + hb)
}

/// A random weighted graph on `n` nodes. Half the graphs draw weights from
/// `{0.25, 0.5, 1}` so equal-length paths are common.
pub fn random_small_graph(seed: u64, n: usize) -> WeightedGraph {
    let mut rng = rng_from_seed(seed);
    let discrete = seed % 2 == 0;
    let p = rng.random_range(0.3..0.9);
    let mut g = WeightedGraph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                let w = if discrete {
                    [0.25, 0.5, 1.0][rng.random_range(0..3)]
                } else {
                    rng.random_range(0.01..1.0)
                };
                g.set_weight(i, j, w);
            }
        }
    }
    g
}

pub fn record(id: usize, date: &str, keywords: &[&str]) -> ArticleRecord {
    let date: YearMonth = date.parse().unwrap();
    ArticleRecord::from_text(format!("r{id}"), date, "filler text", keywords)
}
