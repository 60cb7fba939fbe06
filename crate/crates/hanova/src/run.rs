//! Run orchestration: parse, build the design, dispatch to the engines.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hanova_core::bayes::{summarize_posterior, BayesError, ChainDraws, Diagnostics, HyperPrior, PosteriorDraws, Sampler, SamplerConfig};
use hanova_core::classical::{anova_table, fit_effects, run_moments, ClassicalError, ClassicalTable, MomentsResult};
use hanova_core::design::{build_design, Dataset, DesignError, DesignModel};
use hanova_core::formula::{expand_terms, parse_model, referenced_factors, resolve_aliases, FormulaError, ModelSpec};
use hanova_core::numerics::{NumericsError, RngStream};
use hanova_core::summary::{VCSummary, Warning};
use rayon::prelude::*;
use thiserror::Error;

use crate::io::{read_csv, InputError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Classical,
    Moments,
    Bayes,
    All,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Moments => "moments",
            Method::Bayes => "bayes",
            Method::All => "all",
        }
    }

    fn wants_table(&self) -> bool {
        !matches!(self, Method::Bayes)
    }

    fn wants_moments(&self) -> bool {
        matches!(self, Method::Moments | Method::All)
    }

    fn wants_bayes(&self) -> bool {
        matches!(self, Method::Bayes | Method::All)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
    Svg,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classical" => Ok(Self::Classical),
            "moments" => Ok(Self::Moments),
            "bayes" => Ok(Self::Bayes),
            "all" => Ok(Self::All),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// Everything a command-line run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub model: String,
    pub aliases: Vec<String>,
    pub method: Method,
    pub n_draws: usize,
    pub sampler: SamplerConfig,
    /// Worker threads for the chains; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error("{0}")]
    Config(String),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl RunError {
    /// 2 for problems with the input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Classical(ClassicalError::Numerics(_))
            | RunError::Bayes(BayesError::NumericalFailure(_) | BayesError::Numerics(_)) => 3,
            _ => 2,
        }
    }
}

impl From<NumericsError> for RunError {
    fn from(e: NumericsError) -> Self {
        RunError::Classical(ClassicalError::Numerics(e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentsOutput {
    pub result: MomentsResult,
    pub summary: VCSummary,
    pub n_draws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesOutput {
    pub draws: PosteriorDraws,
    pub diagnostics: Diagnostics,
    pub summary: VCSummary,
    pub config: SamplerConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchInfo {
    pub label: String,
    pub j: usize,
    pub df: usize,
}

/// Output of one analysis, ready for rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResults {
    pub model: String,
    pub method: Method,
    pub seed: u64,
    pub batches: Vec<BatchInfo>,
    pub table: Option<ClassicalTable>,
    pub moments: Option<MomentsOutput>,
    pub bayes: Option<BayesOutput>,
    pub warnings: Vec<Warning>,
}

impl RunResults {
    /// The display summary: posterior when available, else moments.
    pub fn summary(&self) -> Option<&VCSummary> {
        self.bayes.as_ref().map(|b| &b.summary).or(self.moments.as_ref().map(|m| &m.summary))
    }
}

/// Model text with any extra `coarse=fine` alias declarations appended.
pub fn model_with_aliases(model: &str, aliases: &[String]) -> Result<ModelSpec, RunError> {
    let mut text = model.to_string();
    for a in aliases {
        let Some((coarse, fine)) = a.split_once('=') else {
            return Err(RunError::Config(format!("alias `{a}` must look like `coarse=fine`")));
        };
        text.push_str(&format!(" + alias({} = {})", coarse.trim(), fine.trim()));
    }
    Ok(parse_model(&text)?)
}

/// Factors the model needs from the data, in first-use order.
pub fn required_factors(spec: &ModelSpec) -> Vec<String> {
    referenced_factors(spec)
}

pub fn build(spec: &ModelSpec, data: &Dataset) -> Result<DesignModel, RunError> {
    let names = data.factor_names();
    let defs = expand_terms(spec, &names)?;
    let aliases = resolve_aliases(spec, &names)?;
    Ok(build_design(&defs, data, &aliases)?)
}

/// Run every chain, in parallel over `threads` workers. Chain `c` always uses
/// stream `fork(c)` of the seed, so the result does not depend on `threads`.
pub fn run_chains_parallel(
    sampler: &Sampler<'_>,
    config: &SamplerConfig,
    threads: Option<usize>,
) -> Result<PosteriorDraws, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| RunError::Config(e.to_string()))?;
    let chains: Vec<ChainDraws> = pool.install(|| {
        (0..config.chains).into_par_iter().map(|c| sampler.run_chain(config, c)).collect::<Result<Vec<_>, _>>()
    })?;
    Ok(PosteriorDraws { chains })
}

/// Analyse an in-memory dataset.
pub fn analyze(
    spec: &ModelSpec,
    data: &Dataset,
    method: Method,
    n_draws: usize,
    sampler: &SamplerConfig,
    threads: Option<usize>,
) -> Result<RunResults, RunError> {
    let design = build(spec, data)?;
    let y = data.y();
    let mut warnings = Vec::new();

    let mut table = None;
    let mut moments = None;
    if method.wants_table() {
        let est = fit_effects(&design, y)?;
        table = Some(anova_table(&est, &design)?);
        if method.wants_moments() {
            let result = run_moments(&design, &est, n_draws, &RngStream::new(sampler.seed))?;
            warnings.extend(result.warnings.iter().cloned());
            let summary = result.summary(&design);
            moments = Some(MomentsOutput { result, summary, n_draws });
        }
    }

    let mut bayes = None;
    if method.wants_bayes() {
        let s = Sampler::new(&design, y, HyperPrior::uniform(design.len()), sampler)?;
        let draws = run_chains_parallel(&s, sampler, threads)?;
        let diagnostics = s.diagnose(&draws);
        for w in &diagnostics.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
        let summary = summarize_posterior(&draws, &design);
        bayes = Some(BayesOutput { draws, diagnostics, summary, config: sampler.clone() });
    }

    Ok(RunResults {
        model: spec.to_string(),
        method,
        seed: sampler.seed,
        batches: design
            .batches()
            .iter()
            .map(|b| BatchInfo { label: b.label.clone(), j: b.j(), df: b.df })
            .collect(),
        table,
        moments,
        bayes,
        warnings,
    })
}

/// Read the data file named in `config` and analyse it.
pub fn run(config: &RunConfig) -> Result<RunResults, RunError> {
    if config.format == OutputFormat::Svg && config.method == Method::Classical {
        return Err(RunError::Config("the svg display needs --method moments, bayes or all".into()));
    }
    if config.method.wants_moments() && config.n_draws == 0 {
        return Err(RunError::Config("--draws must be positive".into()));
    }
    if config.method.wants_bayes() {
        config.sampler.validate()?;
    }
    let spec = model_with_aliases(&config.model, &config.aliases)?;
    let factors = required_factors(&spec);
    let refs: Vec<&str> = factors.iter().map(String::as_str).collect();
    let data = read_csv(&config.data, &spec.response, &refs)?;
    analyze(&spec, &data, config.method, config.n_draws, &config.sampler, config.threads)
}
