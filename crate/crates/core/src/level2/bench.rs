//! Harness adapters for the level-2 application kernels.

use crate::error::Result;
use crate::harness::{Benchmark, BenchmarkDescriptor, Instance, VerifyOutcome};
use crate::params::{param_set, ParamSet, ParamSetExt, ParamSpec};
use crate::rng::CounterRng;
use crate::util::{checksum_f32s, checksum_f64s, checksum_u32s, ensure_memory, Fnv1a};

use super::dwt::{dwt53_forward, dwt53_inverse, dwt97_forward, dwt97_inverse};
use super::kmeans::{kmeans, kmeans_reference, seeded_centers, KmeansResult, PointSet};
use super::lavamd::{lavamd, lavamd_all_pairs, relative_error, Interactions, ParticleSpace};
use super::mandelbrot::{
    escape_dwell, mandelbrot_escape, mandelbrot_mariani_silver, mismatch_fraction, DwellImage, View,
};
use super::nw::{
    alignment_score, needleman_wunsch, needleman_wunsch_sequential, AlignOp, SequencePair,
};
use super::srad::{srad, srad_reference, Image2D};
use super::where_filter::{where_filter, where_filter_sequential, CmpOp, Condition, RecordTable};

// ── KMeans ───────────────────────────────────────────────────────────────

pub struct KmeansBenchmark;

impl Benchmark for KmeansBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "kmeans".to_string(),
            level: 2,
            dwarf: Some("dense linear algebra".to_string()),
            domain: Some("data mining".to_string()),
            primary_metric: "mpoint_iters_per_sec".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 1 << 30, "point count"),
                ParamSpec::int("d", 1, 4096, "dimensions per point"),
                ParamSpec::int("k", 1, 1 << 20, "cluster count"),
                ParamSpec::int("iters", 1, 10_000, "maximum Lloyd iterations"),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", (4096i64 << (2 * class)).into()),
                    ("d", 16.into()),
                    ("k", 16.into()),
                    ("iters", 20.into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let n = params.usize("n")?;
        let d = params.usize("d")?;
        let k = params.usize("k")?;
        if k > n {
            return Err(crate::error::Error::invalid_param("k", "must be <= n"));
        }
        ensure_memory((n as u64 * d as u64) * 8 * 2)?;
        let mut rng = CounterRng::new(seed, "kmeans");
        let points = PointSet::random(n, d, &mut rng, 0.0, 100.0);
        let initial = seeded_centers(&points, k, &mut rng.split(1));
        Ok(Box::new(KmeansInstance {
            points,
            initial,
            max_iters: params.usize("iters")?,
            workers,
            result: None,
        }))
    }
}

struct KmeansInstance {
    points: PointSet,
    initial: Vec<f64>,
    max_iters: usize,
    workers: usize,
    result: Option<KmeansResult>,
}

impl Instance for KmeansInstance {
    fn kernel(&mut self) {
        self.result = Some(
            kmeans(&self.points, &self.initial, self.max_iters, self.workers).expect("validated"),
        );
    }

    fn verify(&mut self) -> VerifyOutcome {
        let got = self.result.as_ref().expect("kernel ran");
        for pair in got.wcss_history.windows(2) {
            if pair[1] > pair[0] * (1.0 + 1e-12) + 1e-12 {
                return VerifyOutcome::fail(format!(
                    "WCSS increased from {} to {}",
                    pair[0], pair[1]
                ));
            }
        }
        let expected =
            kmeans_reference(&self.points, &self.initial, self.max_iters).expect("validated");
        if got.assignments == expected.assignments
            && got.centers == expected.centers
            && got.iterations_used == expected.iterations_used
        {
            VerifyOutcome::pass(format!(
                "matches sequential Lloyd's in {} iterations; centers fnv64 {:016x}",
                got.iterations_used,
                checksum_f64s(&got.centers)
            ))
        } else {
            VerifyOutcome::fail("diverged from sequential Lloyd's reference".to_string())
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        let result = self.result.as_ref().expect("kernel ran");
        let work = (self.points.n * result.iterations_used.max(1)) as f64;
        vec![
            (
                "mpoint_iters_per_sec".to_string(),
                work / compute_seconds / 1e6,
            ),
            ("iterations".to_string(), result.iterations_used as f64),
        ]
    }
}

// ── LavaMD ───────────────────────────────────────────────────────────────

pub struct LavamdBenchmark;

impl Benchmark for LavamdBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "lavamd".to_string(),
            level: 2,
            dwarf: Some("n-body".to_string()),
            domain: Some("computational chemistry".to_string()),
            primary_metric: "minteractions_per_sec".to_string(),
            params: vec![
                ParamSpec::int("boxes", 1, 64, "boxes per side of the cubic lattice"),
                ParamSpec::int("ppb", 1, 1024, "particles per box"),
                ParamSpec::float(
                    "cutoff",
                    1e-6,
                    1.0,
                    "interaction cutoff radius (box edge = 1)",
                ),
            ],
            presets: [4i64, 6, 10, 16].map(|boxes| {
                param_set(&[
                    ("boxes", boxes.into()),
                    ("ppb", 64.into()),
                    ("cutoff", 1.0.into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let boxes = params.usize("boxes")?;
        let ppb = params.usize("ppb")?;
        let n = boxes * boxes * boxes * ppb;
        ensure_memory(n as u64 * 8 * 8)?;
        let mut rng = CounterRng::new(seed, "lavamd");
        let space = ParticleSpace::random(boxes, ppb, params.f64("cutoff")?, &mut rng)?;
        Ok(Box::new(LavamdInstance {
            space,
            workers,
            result: None,
        }))
    }
}

struct LavamdInstance {
    space: ParticleSpace,
    workers: usize,
    result: Option<Interactions>,
}

impl Instance for LavamdInstance {
    fn kernel(&mut self) {
        self.result = Some(lavamd(&self.space, self.workers).expect("validated geometry"));
    }

    fn verify(&mut self) -> VerifyOutcome {
        let got = self.result.as_ref().expect("kernel ran");
        let n = self.space.particle_count();
        // all-pairs over every particle is O(n^2); sample large spaces
        let sample: Vec<usize> = if n <= 8192 {
            (0..n).collect()
        } else {
            let step = n / 2048;
            (0..n).step_by(step.max(1)).collect()
        };
        let oracle = lavamd_all_pairs(&self.space, Some(&sample));
        let mut worst = 0.0f64;
        for &i in &sample {
            worst = worst.max(relative_error(got.potential[i], oracle.potential[i]));
            for c in 0..3 {
                worst = worst.max(relative_error(
                    got.displacement[i * 3 + c],
                    oracle.displacement[i * 3 + c],
                ));
            }
        }
        if worst < 1e-10 {
            VerifyOutcome::pass(format!(
                "{} sampled particles match all-pairs oracle (worst rel {worst:.2e}); fnv64 {:016x}",
                sample.len(),
                checksum_f64s(&got.potential)
            ))
        } else {
            VerifyOutcome::fail(format!(
                "worst relative error {worst:.2e} vs all-pairs oracle"
            ))
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        let pairs = self.result.as_ref().expect("kernel ran").pairs_evaluated;
        vec![(
            "minteractions_per_sec".to_string(),
            pairs as f64 / compute_seconds / 1e6,
        )]
    }
}

// ── Mandelbrot ───────────────────────────────────────────────────────────

pub struct MandelbrotBenchmark;

impl Benchmark for MandelbrotBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "mandelbrot".to_string(),
            level: 2,
            dwarf: None,
            domain: Some("numerical analysis".to_string()),
            primary_metric: "mpixels_per_sec".to_string(),
            params: vec![
                ParamSpec::int("width", 1, 65536, "image width"),
                ParamSpec::int("height", 1, 65536, "image height"),
                ParamSpec::int("max_iter", 1, 1 << 30, "iteration cap"),
                ParamSpec::choice("algo", &["escape", "ms"], "escape time or Mariani-Silver"),
                ParamSpec::int("min_tile", 2, 65536, "Mariani-Silver leaf size"),
                ParamSpec::float("xmin", -1e6, 1e6, "view left"),
                ParamSpec::float("xmax", -1e6, 1e6, "view right"),
                ParamSpec::float("ymin", -1e6, 1e6, "view bottom"),
                ParamSpec::float("ymax", -1e6, 1e6, "view top"),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("width", (256i64 << class).into()),
                    ("height", (256i64 << class).into()),
                    ("max_iter", (128i64 << class).into()),
                    ("algo", "escape".into()),
                    ("min_tile", 8.into()),
                    ("xmin", (-2.5).into()),
                    ("xmax", 1.0.into()),
                    ("ymin", (-1.0).into()),
                    ("ymax", 1.0.into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, _seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let width = params.usize("width")?;
        let height = params.usize("height")?;
        ensure_memory(width as u64 * height as u64 * 4 * 2)?;
        Ok(Box::new(MandelbrotInstance {
            view: View {
                x_min: params.f64("xmin")?,
                x_max: params.f64("xmax")?,
                y_min: params.f64("ymin")?,
                y_max: params.f64("ymax")?,
            },
            width,
            height,
            max_iter: params.u64("max_iter")? as u32,
            min_tile: params.usize("min_tile")?,
            use_subdivision: params.str("algo")? == "ms",
            workers,
            image: None,
            pixels_iterated: 0,
        }))
    }
}

struct MandelbrotInstance {
    view: View,
    width: usize,
    height: usize,
    max_iter: u32,
    min_tile: usize,
    use_subdivision: bool,
    workers: usize,
    image: Option<DwellImage>,
    pixels_iterated: u64,
}

impl Instance for MandelbrotInstance {
    fn kernel(&mut self) {
        if self.use_subdivision {
            let out = mandelbrot_mariani_silver(
                self.view,
                self.width,
                self.height,
                self.max_iter,
                self.min_tile,
                self.workers,
            )
            .expect("validated view");
            self.pixels_iterated = out.pixels_iterated;
            self.image = Some(out.image);
        } else {
            self.image = Some(
                mandelbrot_escape(
                    self.view,
                    self.width,
                    self.height,
                    self.max_iter,
                    self.workers,
                )
                .expect("validated view"),
            );
            self.pixels_iterated = (self.width * self.height) as u64;
        }
    }

    fn verify(&mut self) -> VerifyOutcome {
        let image = self.image.as_ref().expect("kernel ran");
        let checksum = checksum_u32s(&image.dwell);
        if self.use_subdivision {
            let oracle = mandelbrot_escape(
                self.view,
                self.width,
                self.height,
                self.max_iter,
                self.workers,
            )
            .expect("validated view");
            let mismatch = mismatch_fraction(image, &oracle);
            let total = (self.width * self.height) as u64;
            if mismatch <= 0.001 && self.pixels_iterated < total {
                VerifyOutcome::pass(format!(
                    "mismatch {mismatch:.5} <= 0.001 vs escape oracle; iterated {}/{total}; fnv64 {checksum:016x}",
                    self.pixels_iterated
                ))
            } else {
                VerifyOutcome::fail(format!(
                    "mismatch {mismatch:.5} vs escape oracle (iterated {}/{total})",
                    self.pixels_iterated
                ))
            }
        } else {
            // spot-check the parallel assembly against direct evaluation
            let step = (image.dwell.len() / 4096).max(1);
            for idx in (0..image.dwell.len()).step_by(step) {
                let (px, py) = (idx % self.width, idx / self.width);
                let cx = self.view.x_min
                    + (self.view.x_max - self.view.x_min) * (px as f64 + 0.5) / self.width as f64;
                let cy = self.view.y_min
                    + (self.view.y_max - self.view.y_min) * (py as f64 + 0.5) / self.height as f64;
                if image.dwell[idx] != escape_dwell(cx, cy, self.max_iter) {
                    return VerifyOutcome::fail(format!(
                        "pixel {idx} differs from direct evaluation"
                    ));
                }
            }
            VerifyOutcome::pass(format!(
                "sampled pixels match direct evaluation; fnv64 {checksum:016x}"
            ))
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        let total = (self.width * self.height) as f64;
        let mut metrics = vec![("mpixels_per_sec".to_string(), total / compute_seconds / 1e6)];
        if self.use_subdivision {
            metrics.push((
                "pixels_iterated_fraction".to_string(),
                self.pixels_iterated as f64 / total,
            ));
        }
        metrics
    }
}

// ── Needleman-Wunsch ─────────────────────────────────────────────────────

pub struct NwBenchmark;

impl Benchmark for NwBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "nw".to_string(),
            level: 2,
            dwarf: Some("dynamic programming".to_string()),
            domain: Some("bioinformatics".to_string()),
            primary_metric: "mcells_per_sec".to_string(),
            params: vec![
                ParamSpec::int("len_a", 1, 1 << 20, "first sequence length"),
                ParamSpec::int("len_b", 1, 1 << 20, "second sequence length"),
                ParamSpec::int("alphabet", 2, 256, "alphabet size"),
                ParamSpec::int("match", -1000, 1000, "match score"),
                ParamSpec::int("mismatch", -1000, 1000, "mismatch score"),
                ParamSpec::int("gap", -1000, 1000, "gap penalty"),
            ],
            presets: [1i64, 2, 3, 4].map(|class| {
                param_set(&[
                    ("len_a", (500 << class).into()),
                    ("len_b", (500 << class).into()),
                    ("alphabet", 24.into()),
                    ("match", 1.into()),
                    ("mismatch", (-1).into()),
                    ("gap", (-1).into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let len_a = params.usize("len_a")?;
        let len_b = params.usize("len_b")?;
        ensure_memory((len_a as u64 + 1) * (len_b as u64 + 1) * 4 * 2)?;
        let rng = CounterRng::new(seed, "nw");
        let pair = SequencePair::random(
            len_a,
            len_b,
            params.usize("alphabet")?,
            params.f64("match")? as i32,
            params.f64("mismatch")? as i32,
            params.f64("gap")? as i32,
            &rng,
        );
        Ok(Box::new(NwInstance {
            pair,
            workers,
            result: None,
        }))
    }
}

struct NwInstance {
    pair: SequencePair,
    workers: usize,
    result: Option<(i32, Vec<AlignOp>)>,
}

impl Instance for NwInstance {
    fn kernel(&mut self) {
        self.result = Some(needleman_wunsch(&self.pair, self.workers).expect("validated pair"));
    }

    fn verify(&mut self) -> VerifyOutcome {
        let (score, ops) = self.result.as_ref().expect("kernel ran");
        let (expected_score, expected_ops) =
            needleman_wunsch_sequential(&self.pair).expect("validated pair");
        let replay = match alignment_score(&self.pair, ops) {
            Ok(s) => s,
            Err(e) => return VerifyOutcome::fail(format!("invalid alignment: {e}")),
        };
        if *score == expected_score && replay == *score && *ops == expected_ops {
            let mut hasher = Fnv1a::new();
            for op in ops {
                hasher.update(&[*op as u8]);
            }
            VerifyOutcome::pass(format!(
                "score {score} matches sequential DP and alignment replay; ops fnv64 {:016x}",
                hasher.finish()
            ))
        } else {
            VerifyOutcome::fail(format!(
                "score {score} (replay {replay}) vs sequential {expected_score}"
            ))
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        let cells = (self.pair.a.len() * self.pair.b.len()) as f64;
        vec![("mcells_per_sec".to_string(), cells / compute_seconds / 1e6)]
    }
}

// ── SRAD ─────────────────────────────────────────────────────────────────

pub struct SradBenchmark;

impl Benchmark for SradBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "srad".to_string(),
            level: 2,
            dwarf: Some("structured grid".to_string()),
            domain: Some("computer vision".to_string()),
            primary_metric: "mpixel_iters_per_sec".to_string(),
            params: vec![
                ParamSpec::int("width", 3, 65536, "image width"),
                ParamSpec::int("height", 3, 65536, "image height"),
                ParamSpec::int("iters", 1, 100_000, "diffusion iterations"),
                ParamSpec::float("lambda", 1e-9, 1.0, "update rate"),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("width", (256i64 << class).into()),
                    ("height", (256i64 << class).into()),
                    ("iters", 10.into()),
                    ("lambda", 0.5.into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let width = params.usize("width")?;
        let height = params.usize("height")?;
        ensure_memory(width as u64 * height as u64 * 4 * 8)?;
        let mut rng = CounterRng::new(seed, "srad");
        Ok(Box::new(SradInstance {
            image: Image2D::random(width, height, &mut rng),
            lambda: params.f64("lambda")? as f32,
            iterations: params.usize("iters")?,
            workers,
            result: None,
        }))
    }
}

struct SradInstance {
    image: Image2D,
    lambda: f32,
    iterations: usize,
    workers: usize,
    result: Option<Image2D>,
}

impl Instance for SradInstance {
    fn kernel(&mut self) {
        self.result =
            Some(srad(&self.image, self.lambda, self.iterations, self.workers).expect("validated"));
    }

    fn verify(&mut self) -> VerifyOutcome {
        let got = self.result.as_ref().expect("kernel ran");
        let expected =
            srad_reference(&self.image, self.lambda, self.iterations).expect("validated");
        let bitwise_equal = got
            .pixels
            .iter()
            .zip(&expected.pixels)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if bitwise_equal {
            VerifyOutcome::pass(format!(
                "bitwise equal to sequential reference; variance {:.6e} -> {:.6e}; fnv64 {:016x}",
                self.image.variance(),
                got.variance(),
                checksum_f32s(&got.pixels)
            ))
        } else {
            VerifyOutcome::fail("diverged from sequential reference".to_string())
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        let work = (self.image.width * self.image.height * self.iterations) as f64;
        vec![(
            "mpixel_iters_per_sec".to_string(),
            work / compute_seconds / 1e6,
        )]
    }
}

// ── Where ────────────────────────────────────────────────────────────────

pub struct WhereBenchmark;

impl Benchmark for WhereBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "where".to_string(),
            level: 2,
            dwarf: Some("map reduce".to_string()),
            domain: Some("data analytics".to_string()),
            primary_metric: "mrecords_per_sec".to_string(),
            params: vec![
                ParamSpec::int("n", 0, 1 << 32, "record count"),
                ParamSpec::int("cols", 1, 64, "column count"),
                ParamSpec::int("max_value", 1, 1 << 30, "values drawn from [0, max_value)"),
                ParamSpec::int(
                    "threshold",
                    -(1 << 30),
                    1 << 30,
                    "predicate: c0 < threshold",
                ),
            ],
            presets: [1i64, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", (125_000 << (2 * class)).into()),
                    ("cols", 4.into()),
                    ("max_value", 1000.into()),
                    ("threshold", 500.into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let n = params.usize("n")?;
        let cols = params.usize("cols")?;
        ensure_memory(n as u64 * cols as u64 * 8 * 3)?;
        let rng = CounterRng::new(seed, "where");
        let table = RecordTable::random(n, cols, params.f64("max_value")? as i64, &rng);
        let predicate = vec![Condition {
            column: "c0".to_string(),
            op: CmpOp::Lt,
            value: params.f64("threshold")? as i64,
        }];
        Ok(Box::new(WhereInstance {
            table,
            predicate,
            workers,
            result: None,
        }))
    }
}

struct WhereInstance {
    table: RecordTable,
    predicate: Vec<Condition>,
    workers: usize,
    result: Option<RecordTable>,
}

impl Instance for WhereInstance {
    fn kernel(&mut self) {
        self.result =
            Some(where_filter(&self.table, &self.predicate, self.workers).expect("validated"));
    }

    fn verify(&mut self) -> VerifyOutcome {
        let got = self.result.as_ref().expect("kernel ran");
        let expected = where_filter_sequential(&self.table, &self.predicate).expect("validated");
        if *got == expected {
            let mut hasher = Fnv1a::new();
            for col in &got.columns {
                for &v in col {
                    hasher.update(&v.to_le_bytes());
                }
            }
            VerifyOutcome::pass(format!(
                "matches sequential filter; {} of {} records kept; fnv64 {:016x}",
                got.n,
                self.table.n,
                hasher.finish()
            ))
        } else {
            VerifyOutcome::fail("output differs from sequential filter".to_string())
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "mrecords_per_sec".to_string(),
            self.table.n as f64 / compute_seconds / 1e6,
        )]
    }
}

// ── DWT2D ────────────────────────────────────────────────────────────────

pub struct Dwt2dBenchmark;

impl Benchmark for Dwt2dBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "dwt2d".to_string(),
            level: 2,
            dwarf: Some("spectral method".to_string()),
            domain: Some("image processing".to_string()),
            primary_metric: "mpixels_per_sec".to_string(),
            params: vec![
                ParamSpec::int("width", 2, 65536, "image width"),
                ParamSpec::int("height", 2, 65536, "image height"),
                ParamSpec::choice("variant", &["int_5_3", "float_9_7"], "lifting variant"),
                ParamSpec::choice("direction", &["forward", "inverse"], "transform direction"),
                ParamSpec::int("levels", 1, 16, "decomposition levels"),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("width", (256i64 << class).into()),
                    ("height", (256i64 << class).into()),
                    ("variant", "float_9_7".into()),
                    ("direction", "forward".into()),
                    ("levels", 3.into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let width = params.usize("width")?;
        let height = params.usize("height")?;
        let levels = params.u64("levels")? as u32;
        ensure_memory(width as u64 * height as u64 * 4 * 3)?;
        let forward = params.str("direction")? == "forward";
        let mut rng = CounterRng::new(seed, "dwt2d");
        match params.str("variant")? {
            "int_5_3" => {
                let pristine: Vec<i32> = (0..width * height)
                    .map(|_| (rng.next_u64() % 1024) as i32 - 512)
                    .collect();
                let mut input = pristine.clone();
                if !forward {
                    dwt53_forward(&mut input, width, height, levels, workers)?;
                } else {
                    // validate geometry up front so kernel cannot fail
                    let mut probe = pristine.clone();
                    dwt53_forward(&mut probe, width, height, levels, workers)?;
                }
                Ok(Box::new(Dwt53Instance {
                    pristine,
                    input,
                    working: Vec::new(),
                    width,
                    height,
                    levels,
                    forward,
                    workers,
                }))
            }
            _ => {
                let mut pristine = vec![0.0f32; width * height];
                rng.fill_f32(&mut pristine, 0.0, 1.0);
                let mut input = pristine.clone();
                if !forward {
                    dwt97_forward(&mut input, width, height, levels, workers)?;
                } else {
                    let mut probe = pristine.clone();
                    dwt97_forward(&mut probe, width, height, levels, workers)?;
                }
                Ok(Box::new(Dwt97Instance {
                    pristine,
                    input,
                    working: Vec::new(),
                    width,
                    height,
                    levels,
                    forward,
                    workers,
                }))
            }
        }
    }
}

fn dwt_pixels_processed(width: usize, height: usize, levels: u32) -> f64 {
    (0..levels)
        .map(|l| ((width >> l) * (height >> l)) as f64)
        .sum()
}

struct Dwt53Instance {
    pristine: Vec<i32>,
    input: Vec<i32>,
    working: Vec<i32>,
    width: usize,
    height: usize,
    levels: u32,
    forward: bool,
    workers: usize,
}

impl Instance for Dwt53Instance {
    fn stage(&mut self) {
        self.working = self.input.clone();
    }

    fn kernel(&mut self) {
        if self.forward {
            dwt53_forward(
                &mut self.working,
                self.width,
                self.height,
                self.levels,
                self.workers,
            )
            .expect("validated geometry");
        } else {
            dwt53_inverse(
                &mut self.working,
                self.width,
                self.height,
                self.levels,
                self.workers,
            )
            .expect("validated geometry");
        }
    }

    fn verify(&mut self) -> VerifyOutcome {
        // reversibility: forward then inverse must reproduce the input bits
        let mut round = self.pristine.clone();
        dwt53_forward(
            &mut round,
            self.width,
            self.height,
            self.levels,
            self.workers,
        )
        .expect("validated geometry");
        dwt53_inverse(
            &mut round,
            self.width,
            self.height,
            self.levels,
            self.workers,
        )
        .expect("validated geometry");
        let mut hasher = Fnv1a::new();
        for v in &self.working {
            hasher.update(&v.to_le_bytes());
        }
        if round == self.pristine {
            VerifyOutcome::pass(format!(
                "5/3 round trip bit-exact; output fnv64 {:016x}",
                hasher.finish()
            ))
        } else {
            VerifyOutcome::fail("5/3 round trip not bit-exact".to_string())
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "mpixels_per_sec".to_string(),
            dwt_pixels_processed(self.width, self.height, self.levels) / compute_seconds / 1e6,
        )]
    }
}

struct Dwt97Instance {
    pristine: Vec<f32>,
    input: Vec<f32>,
    working: Vec<f32>,
    width: usize,
    height: usize,
    levels: u32,
    forward: bool,
    workers: usize,
}

impl Instance for Dwt97Instance {
    fn stage(&mut self) {
        self.working = self.input.clone();
    }

    fn kernel(&mut self) {
        if self.forward {
            dwt97_forward(
                &mut self.working,
                self.width,
                self.height,
                self.levels,
                self.workers,
            )
            .expect("validated geometry");
        } else {
            dwt97_inverse(
                &mut self.working,
                self.width,
                self.height,
                self.levels,
                self.workers,
            )
            .expect("validated geometry");
        }
    }

    fn verify(&mut self) -> VerifyOutcome {
        let mut round = self.pristine.clone();
        dwt97_forward(
            &mut round,
            self.width,
            self.height,
            self.levels,
            self.workers,
        )
        .expect("validated geometry");
        dwt97_inverse(
            &mut round,
            self.width,
            self.height,
            self.levels,
            self.workers,
        )
        .expect("validated geometry");
        let max_err = round
            .iter()
            .zip(&self.pristine)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        if max_err < 1e-4 {
            VerifyOutcome::pass(format!(
                "9/7 round trip max abs error {max_err:.2e} < 1e-4; output fnv64 {:016x}",
                checksum_f32s(&self.working)
            ))
        } else {
            VerifyOutcome::fail(format!("9/7 round trip error {max_err:.2e} >= 1e-4"))
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "mpixels_per_sec".to_string(),
            dwt_pixels_processed(self.width, self.height, self.levels) / compute_seconds / 1e6,
        )]
    }
}
