//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use mixfrac_core::dimension::{CutoffConfig, DimensionKind};
use mixfrac_core::gauge::GaugeFn;
use mixfrac_core::measure::{multinomial_cascade, read_measure, VectorMeasure};
use mixfrac_core::partition::BallScheme;

pub const DEFAULT_LEAF_CAP: usize = 1 << 24;

pub const KEYS: &[&str] = &[
    "base",
    "depth",
    "weights",
    "measure_file",
    "leaf_cap",
    "gauge",
    "scheme",
    "q_min",
    "q_max",
    "q_step",
    "kinds",
    "p_step",
    "p_count",
    "eta",
    "q0",
    "alpha_query",
    "window",
    "t_lo",
    "t_hi",
    "cutoff_tol",
    "max_iter",
    "seed",
    "out_dir",
    "ldp_generator",
    "ldp_c",
    "ldp_p",
    "ldp_mean",
    "ldp_std",
    "ldp_trials",
    "ldp_horizon",
    "ldp_checkpoints",
    "ldp_t_max",
    "ldp_t_step",
    "ldp_slack",
    "verify_q_max",
    "verify_q_step",
    "verify_q_spectrum",
    "verify_instances",
];

#[derive(Debug, Clone)]
pub enum MeasureSpec {
    Cascade { base: usize, depth: usize, weights: Vec<Vec<f64>> },
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub enum GaugeSpec {
    Log,
    Table(PathBuf),
    Expr(String),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub measure: Option<MeasureSpec>,
    pub depth: usize,
    pub leaf_cap: usize,
    pub gauge: GaugeSpec,
    pub scheme: BallScheme,
    pub q_axis: Vec<f64>,
    pub kinds: Vec<DimensionKind>,
    pub p_step: f64,
    pub p_count: usize,
    pub eta: f64,
    pub q0: Option<Vec<f64>>,
    pub alpha_query: Option<Vec<f64>>,
    pub cutoff: CutoffConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub ldp_generator: String,
    pub ldp_c: Vec<f64>,
    pub ldp_p: Vec<f64>,
    pub ldp_mean: Vec<f64>,
    pub ldp_std: Vec<f64>,
    pub ldp_trials: usize,
    pub ldp_horizon: usize,
    pub ldp_checkpoints: Vec<usize>,
    pub ldp_t: Vec<f64>,
    pub ldp_slack: f64,
    pub verify_q_max: f64,
    pub verify_q_step: f64,
    pub verify_q_spectrum: f64,
    pub verify_instances: usize,
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            bail!("line {}: unknown key `{k}`", i + 1);
        }
        if map.insert(k.to_string(), v.trim().to_string()).is_some() {
            bail!("line {}: duplicate key `{k}`", i + 1);
        }
    }
    Ok(map)
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.0.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| anyhow!("key `{key}`: cannot parse {s:?}")),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.0
            .get(key)
            .map(|s| {
                s.split(',')
                    .map(|x| x.trim().parse().map_err(|_| anyhow!("key `{key}`: cannot parse {x:?}")))
                    .collect()
            })
            .transpose()
    }
}

fn axis(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) {
        bail!("q-grid needs q_min ≤ q_max and q_step > 0");
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).map(|x| if x.abs() < 1e-12 { 0.0 } else { x }).collect())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base_dir)
    }

    /// Relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let f = Fields(parse_pairs(text)?);
        let resolve = |p: &str| -> PathBuf {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        let depth = f.get("depth", 14usize)?;
        let base = f.get("base", 2usize)?;
        let leaf_cap = f.get("leaf_cap", DEFAULT_LEAF_CAP)?;
        let measure = match (f.0.get("weights"), f.0.get("measure_file")) {
            (Some(_), Some(_)) => bail!("give either `weights` or `measure_file`, not both"),
            (Some(w), None) => {
                let weights = w
                    .split(';')
                    .enumerate()
                    .map(|(j, row)| {
                        row.split(',')
                            .map(|x| x.trim().parse::<f64>().map_err(|_| anyhow!("weights row {j}: cannot parse {x:?}")))
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(MeasureSpec::Cascade { base, depth, weights })
            }
            (None, Some(p)) => {
                let p = resolve(p);
                if !p.is_file() {
                    bail!("measure file {} does not exist", p.display());
                }
                Some(MeasureSpec::File(p))
            }
            (None, None) => None,
        };
        if let Some(MeasureSpec::Cascade { base, depth, .. }) = &measure {
            check_cap(*base, *depth, leaf_cap)?;
        }
        let gauge = match f.0.get("gauge").map(String::as_str) {
            None | Some("log") => GaugeSpec::Log,
            Some(s) => match s.split_once(':') {
                Some(("table", p)) => {
                    let p = resolve(p.trim());
                    if !p.is_file() {
                        bail!("gauge table {} does not exist", p.display());
                    }
                    GaugeSpec::Table(p)
                }
                Some(("expr", e)) => GaugeSpec::Expr(e.trim().to_string()),
                _ => bail!("gauge must be `log`, `table:<path>` or `expr:<expression>`"),
            },
        };
        let scheme = match f.0.get("scheme").map(String::as_str) {
            None | Some("grid") => BallScheme::Grid,
            Some("free") => BallScheme::Free,
            Some(s) => bail!("scheme must be `grid` or `free`, got {s:?}"),
        };
        let q_axis = axis(f.get("q_min", -2.0)?, f.get("q_max", 2.0)?, f.get("q_step", 0.5)?)?;
        let kinds = match f.list::<String>("kinds")? {
            None => vec![DimensionKind::Covering, DimensionKind::Lambda],
            Some(ks) => ks.iter().map(|k| DimensionKind::parse(k)).collect::<mixfrac_core::Result<_>>()?,
        };
        let d = CutoffConfig::default();
        let cutoff = CutoffConfig {
            window: f.get("window", d.window)?,
            t_lo: f.get("t_lo", d.t_lo)?,
            t_hi: f.get("t_hi", d.t_hi)?,
            tol: f.get("cutoff_tol", d.tol)?,
            max_iter: f.get("max_iter", d.max_iter)?,
        };
        let eta = f.get("eta", 0.1)?;
        if !(eta > 0.0) {
            bail!("eta must be positive");
        }
        let t_max = f.get("ldp_t_max", 2.0)?;
        let t_step = f.get("ldp_t_step", 0.25)?;
        Ok(RunConfig {
            measure,
            depth,
            leaf_cap,
            gauge,
            scheme,
            q_axis,
            kinds,
            p_step: f.get("p_step", 0.1)?,
            p_count: f.get("p_count", 10usize)?,
            eta,
            q0: f.list("q0")?,
            alpha_query: f.list("alpha_query")?,
            cutoff,
            seed: f.get("seed", 0u64)?,
            out_dir: f.0.get("out_dir").map(|p| resolve(p)).unwrap_or_else(|| PathBuf::from(".")),
            ldp_generator: f.get("ldp_generator", "bernoulli".to_string())?,
            ldp_c: f.list("ldp_c")?.unwrap_or_else(|| vec![0.4]),
            ldp_p: f.list("ldp_p")?.unwrap_or_else(|| vec![0.3]),
            ldp_mean: f.list("ldp_mean")?.unwrap_or_else(|| vec![0.0]),
            ldp_std: f.list("ldp_std")?.unwrap_or_else(|| vec![1.0]),
            ldp_trials: f.get("ldp_trials", 1000usize)?,
            ldp_horizon: f.get("ldp_horizon", 10_000usize)?,
            ldp_checkpoints: f.list("ldp_checkpoints")?.unwrap_or_default(),
            ldp_t: axis(-t_max, t_max, t_step)?,
            ldp_slack: f.get("ldp_slack", 0.05)?,
            verify_q_max: f.get("verify_q_max", 5.0)?,
            verify_q_step: f.get("verify_q_step", 0.5)?,
            verify_q_spectrum: f.get("verify_q_spectrum", 3.0)?,
            verify_instances: f.get("verify_instances", 1000usize)?,
        })
    }

    pub fn build_gauge(&self) -> Result<GaugeFn> {
        Ok(match &self.gauge {
            GaugeSpec::Log => GaugeFn::logarithmic(),
            GaugeSpec::Table(p) => GaugeFn::table_from_csv(p)?,
            GaugeSpec::Expr(e) => GaugeFn::expression(e)?,
        })
    }

    pub fn build_measure(&self) -> Result<VectorMeasure> {
        match &self.measure {
            None => bail!("no measure configured: set `weights` or `measure_file`"),
            Some(MeasureSpec::Cascade { base, depth, weights }) => Ok(multinomial_cascade(*base, *depth, weights)?),
            Some(MeasureSpec::File(p)) => {
                let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                let v = read_measure(BufReader::new(file)).with_context(|| format!("reading {}", p.display()))?;
                check_cap(v.base(), v.depth(), self.leaf_cap)?;
                Ok(v)
            }
        }
    }
}

fn check_cap(base: usize, depth: usize, cap: usize) -> Result<()> {
    match base.checked_pow(depth as u32) {
        Some(n) if n <= cap => Ok(()),
        _ => bail!("{base}^{depth} leaves exceeds the leaf cap of {cap}"),
    }
}
