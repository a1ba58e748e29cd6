//! `limit-shapes`: Wulff and maximizing constructions, the limit-shape
//! experiment and the duality check from the command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad arguments, 3 invalid weight,
//! 4 tolerance exceeded, 5 sampler failure.

mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use limit_shapes::direction::TabulatedWeight;
use limit_shapes::duality::{
    duality_identity_check, random_monotone_path, t_n_weight, DualityError, DualityInstance,
    DualityReport,
};
use limit_shapes::geom::MonotoneCurve;
use limit_shapes::io::{points_to_csv, to_json_string, write_atomic};
use limit_shapes::limit_curve;
use limit_shapes::maxshape::{
    detect_divergence, divergence_witness, max_body_auto, max_shape, normalize_lambda_max,
    verify_corollary, CorollaryReport, DivergenceVerdict, MaxShapeError, MaxShapeResult,
};
use limit_shapes::partitions::{limit_shape_experiment, LimitShapeReport, EXPERIMENT_MIN};
use limit_shapes::rng::trial_rng;
use limit_shapes::tolerances::MIN_RESOLUTION;
use limit_shapes::wulff::{normalize_lambda, wulff_result, WulffError, WulffResult};
use limit_shapes::{DirectionWeight, Point, ProblemClass, WeightKind};
use serde::Serialize;
use svg::{Plot, Series};

#[derive(Parser)]
#[command(name = "limit-shapes", version, about = "Wulff shapes, entropy maximizers and random Young diagrams")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Number of support normals.
    #[arg(long, global = true, default_value_t = 4096)]
    resolution: usize,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, env = "LIMIT_SHAPES_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,
    /// Comma-separated output formats.
    #[arg(long, global = true, value_delimiter = ',', default_value = "json,csv")]
    format: Vec<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Args)]
struct Scale {
    /// Scale of the construction.
    #[arg(long, conflicts_with = "volume")]
    lambda: Option<f64>,
    /// Enclosed area to normalize to (default 1).
    #[arg(long)]
    volume: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Wulff shape of a surface tension.
    Wulff {
        /// `constant:<c>`, `l1`, `entropy`, `sqrt_product` or a CSV path.
        #[arg(long)]
        tau: String,
        #[command(flatten)]
        scale: Scale,
    },
    /// Maximizing curve of a weight, or its divergence witnesses.
    Maxshape {
        /// `constant:<c>`, `l1`, `entropy`, `sqrt_product` or a CSV path.
        #[arg(long)]
        eta: String,
        #[command(flatten)]
        scale: Scale,
    },
    /// Compare the unit-area entropy maximizer with the closed-form curve.
    VerifyCorollary,
    /// Scaled random Young diagrams against the limit curve.
    LimitShape {
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Check the reflection identity on random monotone paths.
    DualityCheck {
        #[arg(long = "box-size", default_value_t = 10.0)]
        box_size: f64,
        #[arg(long, default_value = "1,5")]
        p1: String,
        #[arg(long, default_value = "5,1")]
        p2: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value = "entropy")]
        eta: String,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type Outcome = Result<(), Failure>;

fn parse_weight(spec: &str, class: ProblemClass) -> Result<DirectionWeight, Failure> {
    if let Some(c) = spec.strip_prefix("constant:") {
        let c: f64 = c
            .parse()
            .map_err(|_| fail(2, format!("bad constant in weight spec '{spec}'")))?;
        return Ok(DirectionWeight::constant(c, class));
    }
    match spec {
        "l1" => Ok(DirectionWeight::l1_norm(class)),
        "entropy" => Ok(DirectionWeight::new(WeightKind::Entropy, class)),
        "sqrt_product" => Ok(DirectionWeight::sqrt_product(class)),
        path => {
            if !Path::new(path).is_file() {
                return Err(fail(2, format!("'{path}' is neither a known weight nor a readable file")));
            }
            let table = TabulatedWeight::from_csv_path(path)
                .map_err(|e| fail(2, format!("cannot read weight table '{path}': {e}")))?;
            Ok(DirectionWeight::tabulated(table, class))
        }
    }
}

fn validated(spec: &str, class: ProblemClass) -> Result<DirectionWeight, Failure> {
    let w = parse_weight(spec, class)?;
    let report = w.validate();
    if !report.is_valid() {
        return Err(fail(3, format!("weight '{spec}' is invalid: {report}")));
    }
    Ok(w)
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(fail(2, format!("--{name} must be positive and finite")))
    }
}

struct Outputs<'a> {
    common: &'a Common,
    stem: &'a str,
}

impl Outputs<'_> {
    fn wants(&self, f: Format) -> bool {
        self.common.format.contains(&f)
    }

    fn write(&self, ext: &str, contents: &str) -> Outcome {
        let path = self.common.output_dir.join(format!("{}.{ext}", self.stem));
        write_atomic(&path, contents.as_bytes())
            .map_err(|e| fail(1, format!("cannot write {}: {e}", path.display())))
    }

    fn emit<T: Serialize>(&self, report: &T, points: &[Point], plot: impl FnOnce() -> Plot) -> Outcome {
        if self.wants(Format::Json) {
            let json = to_json_string(report).map_err(|e| fail(1, format!("serialization failed: {e}")))?;
            self.write("json", &json)?;
        }
        if self.wants(Format::Csv) {
            self.write("csv", &points_to_csv(points))?;
        }
        if self.wants(Format::Svg) {
            self.write("svg", &plot().render())?;
        }
        Ok(())
    }
}

fn curve_plot_points(c: &MonotoneCurve, x_max: f64, y_max: f64) -> Vec<Point> {
    c.points()
        .iter()
        .copied()
        .filter(|p| p.x <= 2.0 * x_max && p.y <= 2.0 * y_max)
        .collect()
}

fn reference_series(lambda_ratio: f64, x_max: f64) -> Series {
    // The limit curve scaled by lambda / lambda1.
    let points = (1..=400)
        .map(|i| {
            let x = x_max * i as f64 / 400.0;
            Point::new(x, lambda_ratio * limit_curve::height(x / lambda_ratio))
        })
        .collect();
    Series {
        points,
        color: "#d62728",
        label: "limit curve".into(),
        dashed: true,
    }
}

#[derive(Serialize)]
struct WulffOutput<'a> {
    command: &'static str,
    tau: &'a str,
    #[serde(flatten)]
    result: &'a WulffResult,
}

fn wulff_error(e: WulffError) -> Failure {
    match e {
        WulffError::InvalidWeight(_) | WulffError::WrongClass => fail(3, e.to_string()),
        WulffError::Resolution(_) | WulffError::NonPositive => fail(2, e.to_string()),
        other => fail(1, other.to_string()),
    }
}

fn cmd_wulff(common: &Common, spec: &str, scale: &Scale) -> Outcome {
    let tau = validated(spec, ProblemClass::Minimizing)?;
    let result = match scale.lambda {
        Some(l) => wulff_result(&tau, positive("lambda", l)?, common.resolution).map_err(wulff_error)?,
        None => {
            let v = positive("volume", scale.volume.unwrap_or(1.0))?;
            normalize_lambda(&tau, v, common.resolution).map_err(wulff_error)?.1
        }
    };
    println!("lambda = {}", result.lambda);
    println!("area = {}", result.area);
    println!("functional_value = {}", result.functional_value);
    let vertices = result.polygon.vertices().to_vec();
    let out = Outputs { common, stem: "wulff" };
    out.emit(
        &WulffOutput {
            command: "wulff",
            tau: spec,
            result: &result,
        },
        &vertices,
        || {
            let reach = vertices.iter().map(|p| p.x.abs().max(p.y.abs())).fold(0.0, f64::max) * 1.1;
            let mut loop_pts = vertices.clone();
            loop_pts.extend(vertices.first().copied());
            Plot {
                title: format!("Wulff shape, tau = {spec}"),
                x_range: (-reach, reach),
                y_range: (-reach, reach),
                series: vec![Series {
                    points: loop_pts,
                    color: "#1f77b4",
                    label: "Wulff shape".into(),
                    dashed: false,
                }],
                equal_aspect: true,
            }
        },
    )
}

#[derive(Serialize)]
struct FiniteOutput<'a> {
    command: &'static str,
    eta: &'a str,
    status: &'static str,
    #[serde(flatten)]
    result: &'a MaxShapeResult,
}

#[derive(Serialize)]
struct WitnessSummary {
    gamma: f64,
    log_box_size: f64,
    volume: f64,
    value: f64,
    bound: f64,
    exceeds_bound: bool,
}

#[derive(Serialize)]
struct DivergentOutput<'a> {
    command: &'static str,
    eta: &'a str,
    status: &'static str,
    verdict: &'a DivergenceVerdict,
    witnesses: Vec<WitnessSummary>,
}

fn maxshape_error(e: MaxShapeError) -> Failure {
    match e {
        MaxShapeError::InvalidWeight(_) | MaxShapeError::WrongClass => fail(3, e.to_string()),
        MaxShapeError::Resolution(_) | MaxShapeError::NonPositive => fail(2, e.to_string()),
        other => fail(1, other.to_string()),
    }
}

fn cmd_maxshape(common: &Common, spec: &str, scale: &Scale) -> Outcome {
    let eta = validated(spec, ProblemClass::Maximizing)?;
    if common.resolution < MIN_RESOLUTION {
        return Err(fail(2, format!("--resolution must be at least {MIN_RESOLUTION}")));
    }
    let verdict = detect_divergence(&eta).map_err(maxshape_error)?;
    let out = Outputs { common, stem: "maxshape" };
    if !verdict.is_finite() {
        let mut witnesses = Vec::new();
        let mut shown = None;
        for gamma in [0.1, 0.01] {
            let w = divergence_witness(&eta, gamma).map_err(maxshape_error)?;
            println!("witness gamma = {gamma}: volume = {}, value = {}, bound = {}", w.volume, w.value, w.bound);
            witnesses.push(WitnessSummary {
                gamma,
                log_box_size: w.log_box_size,
                volume: w.volume,
                value: w.value,
                bound: w.bound,
                exceeds_bound: w.exceeds_bound,
            });
            shown.get_or_insert(w.curve);
        }
        println!("status = divergent");
        let curve = shown.unwrap();
        let points = curve_plot_points(&curve, 1e6, 1e6);
        return out.emit(
            &DivergentOutput {
                command: "maxshape",
                eta: spec,
                status: "divergent",
                verdict: &verdict,
                witnesses,
            },
            &points,
            || Plot {
                title: format!("Scaled construction for divergent eta = {spec}, gamma = 0.1"),
                x_range: (0.0, 4.0),
                y_range: (0.0, 4.0),
                series: vec![Series {
                    points: curve_plot_points(&curve, 4.0, 4.0),
                    color: "#1f77b4",
                    label: "construction".into(),
                    dashed: false,
                }],
                equal_aspect: true,
            },
        );
    }
    let result = match scale.lambda {
        Some(l) => max_shape(&eta, positive("lambda", l)?, common.resolution).map_err(maxshape_error)?,
        None => {
            let v = positive("volume", scale.volume.unwrap_or(1.0))?;
            normalize_lambda_max(&eta, v, common.resolution).map_err(maxshape_error)?.1
        }
    };
    let volume = result.volume.finite().unwrap_or(f64::INFINITY);
    println!("status = finite");
    println!("lambda = {}", result.lambda);
    println!("volume = {volume}");
    println!("functional_value = {}", result.functional_value);
    let is_entropy = matches!(eta.kind(), WeightKind::Entropy);
    let reach = 4.0 * volume.sqrt();
    out.emit(
        &FiniteOutput {
            command: "maxshape",
            eta: spec,
            status: "finite",
            result: &result,
        },
        result.curve.points(),
        || {
            let mut series = vec![Series {
                points: curve_plot_points(&result.curve, reach, reach),
                color: "#1f77b4",
                label: "maximizer".into(),
                dashed: false,
            }];
            if is_entropy {
                series.push(reference_series(result.lambda / limit_curve::unit_area_lambda(), reach));
            }
            Plot {
                title: format!("Maximizing curve, eta = {spec}, lambda = {:.6}", result.lambda),
                x_range: (0.0, reach),
                y_range: (0.0, reach),
                series,
                equal_aspect: true,
            }
        },
    )
}

#[derive(Serialize)]
struct CorollaryOutput<'a> {
    command: &'static str,
    tolerance: f64,
    passed: bool,
    #[serde(flatten)]
    report: &'a CorollaryReport,
}

const COROLLARY_TOLERANCE: f64 = 1e-3;
const COROLLARY_RESOLUTION: usize = 4096;

fn cmd_verify_corollary(common: &Common) -> Outcome {
    if common.resolution < MIN_RESOLUTION {
        return Err(fail(2, format!("--resolution must be at least {MIN_RESOLUTION}")));
    }
    let report = verify_corollary(common.resolution).map_err(maxshape_error)?;
    let curve = max_body_auto(&DirectionWeight::entropy(), report.lambda1, common.resolution)
        .map_err(maxshape_error)?;
    let passed = report.sup_distance <= COROLLARY_TOLERANCE && common.resolution >= COROLLARY_RESOLUTION;
    println!("sup_distance = {}", report.sup_distance);
    println!("lambda1 = {}", report.lambda1);
    println!("volume = {}", report.volume);
    println!("v_eta = {}", report.v_eta);
    let out = Outputs { common, stem: "corollary" };
    out.emit(
        &CorollaryOutput {
            command: "verify-corollary",
            tolerance: COROLLARY_TOLERANCE,
            passed,
            report: &report,
        },
        curve.points(),
        || Plot {
            title: format!("Entropy maximizer at m = {} vs limit curve", common.resolution),
            x_range: (0.0, 4.0),
            y_range: (0.0, 4.0),
            series: vec![
                Series {
                    points: curve_plot_points(&curve, 4.0, 4.0),
                    color: "#1f77b4",
                    label: "maximizer".into(),
                    dashed: false,
                },
                reference_series(1.0, 4.0),
            ],
            equal_aspect: true,
        },
    )?;
    if passed {
        Ok(())
    } else {
        Err(fail(
            4,
            format!(
                "sup distance {} exceeds {COROLLARY_TOLERANCE} or resolution is below {COROLLARY_RESOLUTION}",
                report.sup_distance
            ),
        ))
    }
}

#[derive(Serialize)]
struct LimitShapeOutput<'a> {
    command: &'static str,
    #[serde(flatten)]
    report: &'a LimitShapeReport,
}

fn cmd_limit_shape(common: &Common, n: u64, samples: usize) -> Outcome {
    if n < EXPERIMENT_MIN {
        return Err(fail(2, format!("--n must be at least {EXPERIMENT_MIN}; sample smaller sizes directly")));
    }
    if samples == 0 {
        return Err(fail(2, "--samples must be at least 1"));
    }
    let report = limit_shape_experiment(n, samples, common.seed).map_err(|e| fail(5, e.to_string()))?;
    let profile = report.mean_profile().map_err(|e| fail(5, e.to_string()))?;
    println!("n = {n}");
    println!("samples = {samples}");
    println!("seed = {}", common.seed);
    println!("mean_sup_distance = {}", report.mean_sup_distance);
    let out = Outputs { common, stem: "limit_shape" };
    out.emit(
        &LimitShapeOutput {
            command: "limit-shape",
            report: &report,
        },
        profile.points(),
        || Plot {
            title: format!("Mean scaled diagram, n = {n}, {samples} samples, seed {}", common.seed),
            x_range: (0.0, 4.0),
            y_range: (0.0, 4.0),
            series: vec![
                Series {
                    points: profile.points().to_vec(),
                    color: "#1f77b4",
                    label: "mean profile".into(),
                    dashed: false,
                },
                reference_series(1.0, 4.0),
            ],
            equal_aspect: true,
        },
    )
}

#[derive(Serialize)]
struct DualityOutput<'a> {
    command: &'static str,
    eta: &'a str,
    seed: u64,
    derivation: &'static str,
    #[serde(flatten)]
    report: &'a DualityReport,
}

fn parse_point(name: &str, s: &str) -> Result<Point, Failure> {
    let bad = || fail(2, format!("--{name} must be 'x,y', got '{s}'"));
    let (x, y) = s.split_once(',').ok_or_else(bad)?;
    let x: f64 = x.trim().parse().map_err(|_| bad())?;
    let y: f64 = y.trim().parse().map_err(|_| bad())?;
    Ok(Point::new(x, y))
}

const DUALITY_TOLERANCE: f64 = 1e-9;

fn cmd_duality(common: &Common, box_size: f64, p1: &str, p2: &str, trials: usize, spec: &str) -> Outcome {
    if trials == 0 {
        return Err(fail(2, "--trials must be at least 1"));
    }
    let eta = validated(spec, ProblemClass::Maximizing)?;
    let (p1, p2) = (parse_point("p1", p1)?, parse_point("p2", p2)?);
    let inst = DualityInstance::new(eta, box_size, p1, p2).map_err(|e| fail(2, e.to_string()))?;
    if let Err(e) = t_n_weight(&inst) {
        return Err(match e {
            DualityError::BoxTooSmall { .. } => fail(3, format!("reflected weight is not positive: {e}")),
            other => fail(1, other.to_string()),
        });
    }
    let curves = (0..trials)
        .map(|i| random_monotone_path(p1, p2, 1 + i % 40, &mut trial_rng(common.seed, i as u64)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| fail(1, e.to_string()))?;
    let report = duality_identity_check(&inst, &curves).map_err(|e| fail(1, e.to_string()))?;
    println!("constant = {}", report.constant);
    println!("max_relative_deviation = {}", report.max_relative_deviation);
    let out = Outputs { common, stem: "duality" };
    out.emit(
        &DualityOutput {
            command: "duality-check",
            eta: spec,
            seed: common.seed,
            derivation: "each segment contributes N (|dx| + |dy|), so the sum is N times the L1 endpoint distance",
            report: &report,
        },
        curves[0].points(),
        || Plot {
            title: format!("Random monotone paths, N = {box_size}"),
            x_range: (0.0, box_size),
            y_range: (0.0, box_size),
            series: curves
                .iter()
                .take(5)
                .map(|c| Series {
                    points: c.points().to_vec(),
                    color: "#1f77b4",
                    label: String::new(),
                    dashed: false,
                })
                .collect(),
            equal_aspect: true,
        },
    )?;
    if report.max_relative_deviation <= DUALITY_TOLERANCE {
        Ok(())
    } else {
        Err(fail(4, format!("relative deviation {} exceeds {DUALITY_TOLERANCE}", report.max_relative_deviation)))
    }
}

fn run(cli: &Cli) -> Outcome {
    let common = &cli.common;
    if common.resolution < MIN_RESOLUTION {
        return Err(fail(2, format!("--resolution must be at least {MIN_RESOLUTION}")));
    }
    match &cli.command {
        Command::Wulff { tau, scale } => cmd_wulff(common, tau, scale),
        Command::Maxshape { eta, scale } => cmd_maxshape(common, eta, scale),
        Command::VerifyCorollary => cmd_verify_corollary(common),
        Command::LimitShape { n, samples } => cmd_limit_shape(common, *n, *samples),
        Command::DualityCheck {
            box_size,
            p1,
            p2,
            trials,
            eta,
        } => cmd_duality(common, *box_size, p1, p2, *trials, eta),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
