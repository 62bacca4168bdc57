//! Harness adapters for the level-1 benchmarks.

use std::sync::atomic::AtomicU64;

use crate::error::Result;
use crate::harness::{Benchmark, BenchmarkDescriptor, Instance, VerifyOutcome};
use crate::params::{param_set, ParamSet, ParamSetExt, ParamSpec};
use crate::real::Real;
use crate::rng::CounterRng;
use crate::util::{checksum_u32s, checksum_u64s, ensure_memory, Fnv1a};

use super::bfs::{bfs, bfs_sequential, CsrGraph, UNREACHABLE};
use super::gemm::{gemm, gemm_reference, relative_frobenius, Matrix};
use super::gups::{apply_updates, init_table, replay_sequential, reset_table, snapshot};
use super::pathfinder::{pathfinder, pathfinder_sequential, GridCostMap};
use super::sort::{radix_sort, radix_sort_u32, KeyValueArray};

// ── GUPS ─────────────────────────────────────────────────────────────────

pub struct GupsBenchmark;

impl Benchmark for GupsBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "gups".to_string(),
            level: 1,
            dwarf: None,
            domain: None,
            primary_metric: "gups".to_string(),
            params: vec![
                ParamSpec::int("table_log2", 4, 34, "log2 of the 64-bit word table size"),
                ParamSpec::int("updates", 0, 1 << 40, "number of random XOR updates"),
            ],
            presets: [
                param_set(&[("table_log2", 20.into()), ("updates", (4i64 << 20).into())]),
                param_set(&[("table_log2", 22.into()), ("updates", (4i64 << 22).into())]),
                param_set(&[("table_log2", 24.into()), ("updates", (4i64 << 24).into())]),
                param_set(&[("table_log2", 26.into()), ("updates", (4i64 << 26).into())]),
            ],
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let table_log2 = params.u64("table_log2")? as u32;
        let updates = params.u64("updates")?;
        // table + sequential-replay oracle copy
        ensure_memory((8u64 << table_log2) * 2)?;
        Ok(Box::new(GupsInstance {
            table: init_table(table_log2),
            table_log2,
            updates,
            workers,
            rng: CounterRng::new(seed, "gups"),
        }))
    }
}

struct GupsInstance {
    table: Vec<AtomicU64>,
    table_log2: u32,
    updates: u64,
    workers: usize,
    rng: CounterRng,
}

impl Instance for GupsInstance {
    fn stage(&mut self) {
        reset_table(&self.table);
    }

    fn kernel(&mut self) {
        apply_updates(&self.table, &self.rng, self.updates, self.workers);
    }

    fn verify(&mut self) -> VerifyOutcome {
        let got = snapshot(&self.table);
        let expected = replay_sequential(self.table_log2, &self.rng, self.updates);
        let checksum = checksum_u64s(&got);
        if got == expected {
            VerifyOutcome::pass(format!(
                "table matches sequential replay; fnv64 {checksum:016x}"
            ))
        } else {
            let bad = got.iter().zip(&expected).filter(|(a, b)| a != b).count();
            VerifyOutcome::fail(format!("{bad} table words differ from sequential replay"))
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "gups".to_string(),
            self.updates as f64 / compute_seconds / 1e9,
        )]
    }
}

// ── BFS ──────────────────────────────────────────────────────────────────

pub struct BfsBenchmark;

impl Benchmark for BfsBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "bfs".to_string(),
            level: 1,
            dwarf: Some("graph traversal".to_string()),
            domain: None,
            primary_metric: "medges_per_sec".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 1 << 32, "vertex count"),
                ParamSpec::int("degree", 0, 1024, "out-degree of every vertex"),
                ParamSpec::int("source", 0, 1 << 32, "root vertex"),
            ],
            presets: [
                param_set(&[
                    ("n", (1i64 << 16).into()),
                    ("degree", 16.into()),
                    ("source", 0.into()),
                ]),
                param_set(&[
                    ("n", (1i64 << 18).into()),
                    ("degree", 16.into()),
                    ("source", 0.into()),
                ]),
                param_set(&[
                    ("n", (1i64 << 20).into()),
                    ("degree", 16.into()),
                    ("source", 0.into()),
                ]),
                param_set(&[
                    ("n", (1i64 << 22).into()),
                    ("degree", 16.into()),
                    ("source", 0.into()),
                ]),
            ],
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let n = params.usize("n")?;
        let degree = params.usize("degree")?;
        let source = params.usize("source")?;
        if source >= n {
            return Err(crate::error::Error::invalid_param("source", "must be < n"));
        }
        ensure_memory((n as u64) * (degree as u64) * 4 + (n as u64) * 24)?;
        let graph = CsrGraph::random(n, degree, &CounterRng::new(seed, "bfs"));
        Ok(Box::new(BfsInstance {
            graph,
            source,
            workers,
            distances: Vec::new(),
            traversed_edges: 0,
        }))
    }
}

struct BfsInstance {
    graph: CsrGraph,
    source: usize,
    workers: usize,
    distances: Vec<u32>,
    traversed_edges: u64,
}

impl Instance for BfsInstance {
    fn kernel(&mut self) {
        self.distances = bfs(&self.graph, self.source, self.workers).expect("validated inputs");
        self.traversed_edges = (0..self.graph.n)
            .filter(|&v| self.distances[v] != UNREACHABLE)
            .map(|v| self.graph.neighbors(v).len() as u64)
            .sum();
    }

    fn verify(&mut self) -> VerifyOutcome {
        let expected = bfs_sequential(&self.graph, self.source).expect("validated inputs");
        if self.distances == expected {
            let reached = expected.iter().filter(|&&d| d != UNREACHABLE).count();
            VerifyOutcome::pass(format!(
                "distances match queue BFS; reached {reached}/{}; fnv64 {:016x}",
                self.graph.n,
                checksum_u32s(&self.distances)
            ))
        } else {
            let bad = self
                .distances
                .iter()
                .zip(&expected)
                .filter(|(a, b)| a != b)
                .count();
            VerifyOutcome::fail(format!("{bad} distances differ from queue BFS"))
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "medges_per_sec".to_string(),
            self.traversed_edges as f64 / compute_seconds / 1e6,
        )]
    }
}

// ── GEMM ─────────────────────────────────────────────────────────────────

pub struct GemmBenchmark;

impl Benchmark for GemmBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "gemm".to_string(),
            level: 1,
            dwarf: Some("dense linear algebra".to_string()),
            domain: None,
            primary_metric: "gflops".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 16384, "square matrix dimension"),
                ParamSpec::choice("precision", &["f32", "f64"], "element type"),
                ParamSpec::int("ta", 0, 1, "transpose A"),
                ParamSpec::int("tb", 0, 1, "transpose B"),
                ParamSpec::float("alpha", -1e6, 1e6, "product scale"),
                ParamSpec::float("beta", -1e6, 1e6, "accumulator scale"),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", (128i64 << class).into()),
                    ("precision", "f32".into()),
                    ("ta", 0.into()),
                    ("tb", 0.into()),
                    ("alpha", 1.0.into()),
                    ("beta", 1.0.into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let n = params.usize("n")?;
        let elem = if params.str("precision")? == "f64" {
            8
        } else {
            4
        };
        ensure_memory((n as u64 * n as u64) * elem * 5)?;
        match params.str("precision")? {
            "f64" => Ok(Box::new(GemmInstance::<f64>::new(params, seed, workers)?)),
            _ => Ok(Box::new(GemmInstance::<f32>::new(params, seed, workers)?)),
        }
    }
}

struct GemmInstance<T> {
    a: Matrix<T>,
    b: Matrix<T>,
    c: Matrix<T>,
    alpha: T,
    beta: T,
    ta: bool,
    tb: bool,
    n: usize,
    workers: usize,
    out: Option<Matrix<T>>,
}

impl<T: Real> GemmInstance<T> {
    fn new(params: &ParamSet, seed: u64, workers: usize) -> Result<GemmInstance<T>> {
        let n = params.usize("n")?;
        let mut rng = CounterRng::new(seed, "gemm");
        Ok(GemmInstance {
            a: Matrix::random(&mut rng, n, n, -1.0, 1.0),
            b: Matrix::random(&mut rng, n, n, -1.0, 1.0),
            c: Matrix::random(&mut rng, n, n, -1.0, 1.0),
            alpha: T::from_f64(params.f64("alpha")?),
            beta: T::from_f64(params.f64("beta")?),
            ta: params.u64("ta")? == 1,
            tb: params.u64("tb")? == 1,
            n,
            workers,
            out: None,
        })
    }
}

impl<T: Real> Instance for GemmInstance<T> {
    fn kernel(&mut self) {
        self.out = Some(
            gemm(
                &self.a,
                &self.b,
                &self.c,
                self.alpha,
                self.beta,
                self.ta,
                self.tb,
                self.workers,
            )
            .expect("validated dims"),
        );
    }

    fn verify(&mut self) -> VerifyOutcome {
        let out = self.out.as_ref().expect("kernel ran");
        let reference = gemm_reference(
            &self.a, &self.b, &self.c, self.alpha, self.beta, self.ta, self.tb,
        );
        let tolerance = if T::LABEL == "f64" { 1e-10 } else { 1e-4 };
        let err = relative_frobenius(out, &reference);
        let mut hasher = Fnv1a::new();
        for v in &out.data {
            v.write_bits(&mut hasher);
        }
        if err <= tolerance {
            VerifyOutcome::pass(format!(
                "relative Frobenius error {err:.3e} <= {tolerance:.0e}; fnv64 {:016x}",
                hasher.finish()
            ))
        } else {
            VerifyOutcome::fail(format!(
                "relative Frobenius error {err:.3e} exceeds {tolerance:.0e}"
            ))
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        let n = self.n as f64;
        vec![(
            "gflops".to_string(),
            2.0 * n * n * n / compute_seconds / 1e9,
        )]
    }
}

// ── Pathfinder ───────────────────────────────────────────────────────────

pub struct PathfinderBenchmark;

impl Benchmark for PathfinderBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "pathfinder".to_string(),
            level: 1,
            dwarf: Some("dynamic programming".to_string()),
            domain: None,
            primary_metric: "mcells_per_sec".to_string(),
            params: vec![
                ParamSpec::int("rows", 1, 1 << 30, "grid rows"),
                ParamSpec::int("cols", 1, 1 << 30, "grid columns"),
                ParamSpec::int("max_cost", 0, 1 << 20, "maximum per-cell cost"),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                let side: i64 = 500 << class;
                param_set(&[
                    ("rows", side.into()),
                    ("cols", side.into()),
                    ("max_cost", 9.into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let rows = params.usize("rows")?;
        let cols = params.usize("cols")?;
        let max_cost = params.u64("max_cost")? as u32;
        ensure_memory(rows as u64 * cols as u64 * 4 + cols as u64 * 32)?;
        let map = GridCostMap::random(rows, cols, max_cost, &CounterRng::new(seed, "pathfinder"));
        Ok(Box::new(PathfinderInstance {
            map,
            workers,
            result: 0,
        }))
    }
}

struct PathfinderInstance {
    map: GridCostMap,
    workers: usize,
    result: u64,
}

impl Instance for PathfinderInstance {
    fn kernel(&mut self) {
        self.result = pathfinder(&self.map, self.workers).expect("validated grid");
    }

    fn verify(&mut self) -> VerifyOutcome {
        let expected = pathfinder_sequential(&self.map).expect("validated grid");
        if self.result == expected {
            VerifyOutcome::pass(format!("min path cost {expected} matches sequential DP"))
        } else {
            VerifyOutcome::fail(format!(
                "min path cost {} != sequential DP {expected}",
                self.result
            ))
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        let cells = (self.map.rows * self.map.cols) as f64;
        vec![("mcells_per_sec".to_string(), cells / compute_seconds / 1e6)]
    }
}

// ── Sort ─────────────────────────────────────────────────────────────────

pub struct SortBenchmark;

impl Benchmark for SortBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "sort".to_string(),
            level: 1,
            dwarf: Some("sorting".to_string()),
            domain: None,
            primary_metric: "melems_per_sec".to_string(),
            params: vec![
                ParamSpec::int("n", 0, 1 << 32, "element count"),
                ParamSpec::choice(
                    "precision",
                    &["f32", "u32"],
                    "key type: f32 pairs or raw integer keys",
                ),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", (1i64 << (18 + 2 * class)).into()),
                    ("precision", "f32".into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let n = params.usize("n")?;
        ensure_memory(n as u64 * 8 * 4)?;
        match params.str("precision")? {
            "u32" => {
                let rng = CounterRng::new(seed, "sort");
                let keys: Vec<u32> = (0..n).map(|i| rng.at(i as u64) as u32).collect();
                Ok(Box::new(SortU32Instance {
                    keys,
                    values: (0..n as u32).collect(),
                    workers,
                    sorted: None,
                }))
            }
            _ => {
                let mut rng = CounterRng::new(seed, "sort");
                Ok(Box::new(SortF32Instance {
                    input: KeyValueArray::random(n, &mut rng),
                    workers,
                    sorted: None,
                }))
            }
        }
    }
}

struct SortF32Instance {
    input: KeyValueArray,
    workers: usize,
    sorted: Option<KeyValueArray>,
}

impl Instance for SortF32Instance {
    fn kernel(&mut self) {
        self.sorted = Some(radix_sort(&self.input, self.workers));
    }

    fn verify(&mut self) -> VerifyOutcome {
        let sorted = self.sorted.as_ref().expect("kernel ran");
        let mut expected: Vec<(f32, u32)> = self
            .input
            .keys
            .iter()
            .cloned()
            .zip(self.input.values.iter().cloned())
            .collect();
        expected.sort_by(|a, b| a.0.total_cmp(&b.0));
        let matches = sorted
            .keys
            .iter()
            .zip(&sorted.values)
            .zip(&expected)
            .all(|((k, v), (ek, ev))| k.to_bits() == ek.to_bits() && v == ev);
        let mut hasher = Fnv1a::new();
        hasher.update_f32s(&sorted.keys);
        hasher.update_u32s(&sorted.values);
        if matches && sorted.len() == expected.len() {
            VerifyOutcome::pass(format!(
                "matches stable comparison sort; fnv64 {:016x}",
                hasher.finish()
            ))
        } else {
            VerifyOutcome::fail("output differs from stable comparison sort".to_string())
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "melems_per_sec".to_string(),
            self.input.len() as f64 / compute_seconds / 1e6,
        )]
    }
}

struct SortU32Instance {
    keys: Vec<u32>,
    values: Vec<u32>,
    workers: usize,
    sorted: Option<(Vec<u32>, Vec<u32>)>,
}

impl Instance for SortU32Instance {
    fn kernel(&mut self) {
        let mut keys = self.keys.clone();
        let mut values = self.values.clone();
        radix_sort_u32(&mut keys, &mut values, self.workers);
        self.sorted = Some((keys, values));
    }

    fn verify(&mut self) -> VerifyOutcome {
        let (keys, values) = self.sorted.as_ref().expect("kernel ran");
        let mut expected: Vec<(u32, u32)> = self
            .keys
            .iter()
            .cloned()
            .zip(self.values.iter().cloned())
            .collect();
        expected.sort_by_key(|p| p.0);
        let matches = keys
            .iter()
            .zip(values)
            .zip(&expected)
            .all(|((k, v), (ek, ev))| k == ek && v == ev);
        if matches {
            let mut hasher = Fnv1a::new();
            hasher.update_u32s(keys);
            hasher.update_u32s(values);
            VerifyOutcome::pass(format!(
                "matches stable comparison sort; fnv64 {:016x}",
                hasher.finish()
            ))
        } else {
            VerifyOutcome::fail("output differs from stable comparison sort".to_string())
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "melems_per_sec".to_string(),
            self.keys.len() as f64 / compute_seconds / 1e6,
        )]
    }
}
