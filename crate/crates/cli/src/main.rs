//! `rehearsal`: evaluation statistics, ablation worksheets and the HTTP server.

mod input;
mod table;

use std::collections::BTreeMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rehearsal_core::ablation::{self, AblationError};
use rehearsal_core::fixtures::quiz_items;
use rehearsal_core::gateway::{Gateway, GatewayError, ProviderConfig, ProviderKind, TemplateSet};
use rehearsal_core::stats::{self, LabeledUtterance, StatsError, TrueSkillParams};
use rehearsal_core::{Message, Pipeline, PipelineError, ScenarioStore, StoreError};
use serde::Serialize;
use thiserror::Error;
use tracing::info;

use table::{num, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Ablation(#[from] AblationError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("server: {0}")]
    Server(std::io::Error),
}

#[derive(Parser)]
#[command(name = "rehearsal", version, about = "Conflict-resolution roleplay engine: evaluation and serving")]
struct Cli {
    /// Print JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderChoice {
    Mock,
    Live,
}

#[derive(Args, Clone)]
struct ProviderArgs {
    #[arg(long, value_enum, default_value = "mock", env = "REHEARSAL_PROVIDER")]
    provider: ProviderChoice,
    /// Chat-completions endpoint URL for the live provider.
    #[arg(long, env = "REHEARSAL_ENDPOINT")]
    endpoint: Option<String>,
    /// Environment variable holding the bearer token.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,
    #[arg(long, default_value = "gpt-4", env = "REHEARSAL_MODEL")]
    model: String,
    #[arg(long, default_value_t = 30.0)]
    timeout_secs: f64,
    #[arg(long, default_value_t = 2)]
    retries: u32,
    /// Directory with replacement prompt templates.
    #[arg(long)]
    templates: Option<PathBuf>,
}

impl ProviderArgs {
    fn config(&self) -> Result<ProviderConfig, CliError> {
        let timeout = Duration::try_from_secs_f64(self.timeout_secs)
            .map_err(|e| CliError::Input(format!("--timeout-secs: {e}")))?;
        Ok(ProviderConfig {
            kind: match self.provider {
                ProviderChoice::Mock => ProviderKind::Mock,
                ProviderChoice::Live => ProviderKind::LiveHttp,
            },
            endpoint_url: self.endpoint.clone(),
            api_key_source: self.api_key_env.clone(),
            model_name: self.model.clone(),
            request_timeout: timeout,
            retry_limit: self.retries,
            ..ProviderConfig::mock()
        })
    }

    fn pipeline(&self) -> Result<Pipeline, CliError> {
        let mut gateway = Gateway::new(self.config()?.build()?);
        if let Some(dir) = &self.templates {
            gateway = gateway.with_templates(TemplateSet::from_dir(dir)?);
        }
        Ok(Pipeline::new(gateway))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Per-strategy and per-category classification accuracy.
    Accuracy {
        /// CSV with text,gold,predicted columns.
        #[arg(long, required_unless_present = "fixtures")]
        input: Option<PathBuf>,
        /// Use the built-in labeled quiz utterances.
        #[arg(long)]
        fixtures: bool,
        /// Classify rows with the provider instead of reading `predicted`.
        #[arg(long)]
        classify: bool,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// TrueSkill ratings from rank records (JSON lines).
    Trueskill {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = TrueSkillParams::default().beta)]
        beta: f64,
        #[arg(long, default_value_t = TrueSkillParams::default().tau)]
        tau: f64,
        #[arg(long, default_value_t = TrueSkillParams::default().draw_probability)]
        draw_probability: f64,
    },
    /// Mean reciprocal rank, per condition or of an inline rank list.
    Mrr {
        #[arg(long, conflicts_with = "ranks", required_unless_present = "ranks")]
        records: Option<PathBuf>,
        /// Comma-separated ranks.
        #[arg(long)]
        ranks: Option<String>,
        /// Only the last N entries.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Spearman correlation between two raters' ranked worksheets, pooled
    /// and as the mean over ranked sets.
    Spearman {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Cohen's kappa from a two-column CSV or two transcripts' strategy labels.
    Kappa {
        #[arg(long, conflicts_with = "transcripts", required_unless_present = "transcripts")]
        csv: Option<PathBuf>,
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        transcripts: Option<Vec<PathBuf>>,
    },
    /// Two-sample Kolmogorov-Smirnov test.
    Ks {
        /// Number file or transcript (.jsonl: simulated-message scores).
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// Also compute the exact permutation p-value (at most 10 per sample).
        #[arg(long)]
        exact: bool,
    },
    /// Kruskal-Wallis test over a group,value CSV.
    Kw {
        #[arg(long)]
        input: PathBuf,
        /// Also compute the exact permutation p-value (at most 12 observations).
        #[arg(long)]
        exact: bool,
    },
    /// Dunn's pairwise post-hoc test with Holm-Bonferroni decisions.
    Dunn {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Holm-Bonferroni step-down decisions.
    Holm {
        /// Comma-separated p-values.
        #[arg(long, required_unless_present = "input", conflicts_with = "input")]
        p: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Generate a blinded ranking worksheet with one reply per pipeline mode.
    Ablate {
        #[arg(long)]
        premise: String,
        /// Text file with one scripted user turn per line.
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worksheet CSV to write; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory of custom premises.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Join a ranked worksheet back to conditions as rank records.
    IngestRanks {
        #[arg(long)]
        worksheet: PathBuf,
        #[arg(long)]
        seed: u64,
        /// JSON-lines output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP JSON service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080", env = "REHEARSAL_LISTEN")]
        listen: SocketAddr,
        #[arg(long, env = "REHEARSAL_DATA_DIR")]
        data_dir: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
}

fn emit<T: Serialize>(json: bool, value: &T, table: impl FnOnce() -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
    } else {
        print!("{}", table());
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.clone(),
            source,
        }),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn store(data_dir: Option<&PathBuf>) -> Result<ScenarioStore, CliError> {
    Ok(match data_dir {
        Some(dir) => ScenarioStore::open(dir)?,
        None => ScenarioStore::in_memory(),
    })
}

fn accuracy(json: bool, input: Option<PathBuf>, fixtures: bool, classify: bool, provider: &ProviderArgs) -> Result<(), CliError> {
    let mut data: Vec<LabeledUtterance> = match &input {
        Some(path) => input::labeled(path)?,
        None => quiz_items()
            .iter()
            .map(|q| LabeledUtterance {
                text: q.text.to_string(),
                gold: q.gold,
                predicted: None,
            })
            .collect(),
    };
    if classify || fixtures {
        let pipeline = provider.pipeline()?;
        let premise = ScenarioStore::in_memory().list().remove(0);
        let ctx = rehearsal_core::ConversationContext::new(premise);
        for item in &mut data {
            item.predicted = Some(pipeline.classify(&ctx, &Message::user(0, item.text.clone()))?);
        }
    }
    let report = stats::accuracy(&data)?;
    emit(json, &report, || {
        let mut t = Table::new(["label", "accuracy"]);
        for (s, v) in &report.per_strategy {
            t.row([s.display_name().to_string(), num(*v)]);
        }
        for (c, v) in &report.per_category {
            t.row([format!("[{}]", c.display_name()), num(*v)]);
        }
        t.row(["overall".to_string(), num(report.overall)]);
        t.row(["category overall".to_string(), num(report.category_overall)]);
        t.render()
    });
    Ok(())
}

fn spearman(json: bool, a: &Path, b: &Path) -> Result<(), CliError> {
    let ra = input::worksheet_ranks(a)?;
    let rb = input::worksheet_ranks(b)?;
    let index: BTreeMap<(usize, usize), u32> = rb
        .iter()
        .filter_map(|&(t, s, r)| r.map(|r| ((t, s), r)))
        .collect();
    let mut sets: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (t, s, r) in ra {
        if let (Some(x), Some(&y)) = (r, index.get(&(t, s))) {
            let set = sets.entry(t).or_default();
            set.0.push(f64::from(x));
            set.1.push(f64::from(y));
        }
    }
    let (px, py): (Vec<f64>, Vec<f64>) = sets
        .values()
        .flat_map(|(x, y)| x.iter().copied().zip(y.iter().copied()))
        .unzip();
    let pooled = stats::spearman(&px, &py)?;
    let sets: Vec<(Vec<f64>, Vec<f64>)> = sets.into_values().collect();
    let (per_set, used) = stats::spearman_per_set_mean(&sets)?;
    #[derive(Serialize)]
    struct Report {
        pooled: f64,
        per_set_mean: f64,
        sets_used: usize,
        sets_total: usize,
        pairs: usize,
    }
    let report = Report {
        pooled,
        per_set_mean: per_set,
        sets_used: used,
        sets_total: sets.len(),
        pairs: px.len(),
    };
    emit(json, &report, || {
        let mut t = Table::new(["statistic", "value"]);
        t.row(["pooled rho".to_string(), num(report.pooled)]);
        t.row(["per-set mean rho".to_string(), num(report.per_set_mean)]);
        t.row(["sets used".to_string(), format!("{}/{}", report.sets_used, report.sets_total)]);
        t.row(["pairs".to_string(), report.pairs.to_string()]);
        t.render()
    });
    Ok(())
}

fn kappa(json: bool, csv: Option<PathBuf>, transcripts: Option<Vec<PathBuf>>) -> Result<(), CliError> {
    let (a, b) = match (csv, transcripts) {
        (Some(path), _) => input::label_pairs(&path)?,
        (None, Some(paths)) => {
            let ta = input::transcript(&paths[0])?;
            let tb = input::transcript(&paths[1])?;
            ta.iter()
                .zip(&tb)
                .filter_map(|(x, y)| Some((x.strategy?.canonical_name().to_string(), y.strategy?.canonical_name().to_string())))
                .unzip()
        }
        (None, None) => return Err(CliError::Input("give --csv or --transcripts".into())),
    };
    let kappa = stats::cohen_kappa(&a, &b)?;
    #[derive(Serialize)]
    struct Report {
        kappa: f64,
        n: usize,
    }
    let report = Report { kappa, n: a.len() };
    emit(json, &report, || {
        let mut t = Table::new(["statistic", "value"]);
        t.row(["kappa".to_string(), num(report.kappa)]);
        t.row(["n".to_string(), report.n.to_string()]);
        t.render()
    });
    Ok(())
}

fn named_groups(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    Ok(input::groups(path)?.into_iter().unzip())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let json = cli.json;
    match cli.command {
        Command::Accuracy {
            input,
            fixtures,
            classify,
            provider,
        } => accuracy(json, input, fixtures, classify, &provider)?,
        Command::Trueskill {
            records,
            beta,
            tau,
            draw_probability,
        } => {
            let params = TrueSkillParams {
                beta,
                tau,
                draw_probability,
            };
            let ratings = stats::rate_records(&input::records(&records)?, params)?;
            emit(json, &ratings, || {
                let mut t = Table::new(["condition", "mu", "sigma"]);
                for (id, r) in &ratings {
                    t.row([id.clone(), num(r.mu), num(r.sigma)]);
                }
                t.render()
            });
        }
        Command::Mrr {
            records,
            ranks,
            window,
        } => {
            let mut report = BTreeMap::new();
            if let Some(list) = ranks {
                let ranks: Vec<u32> = list
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|e| CliError::Input(format!("{t:?}: {e}"))))
                    .collect::<Result<_, _>>()?;
                report.insert("ranks".to_string(), stats::mrr(&ranks, window)?);
            } else if let Some(path) = records {
                let mut per: BTreeMap<String, Vec<u32>> = BTreeMap::new();
                for record in input::records(&path)? {
                    for (id, r) in record.item_ids.iter().zip(&record.ranks) {
                        per.entry(id.clone()).or_default().push(*r);
                    }
                }
                for (id, ranks) in per {
                    report.insert(id, stats::mrr(&ranks, window)?);
                }
            }
            emit(json, &report, || {
                let mut t = Table::new(["condition", "mrr"]);
                for (id, v) in &report {
                    t.row([id.clone(), num(*v)]);
                }
                t.render()
            });
        }
        Command::Spearman { a, b } => spearman(json, &a, &b)?,
        Command::Kappa { csv, transcripts } => kappa(json, csv, transcripts)?,
        Command::Ks { x, y, exact } => {
            let (xs, ys) = (input::numbers(&x)?, input::numbers(&y)?);
            let r = stats::ks_two_sample(&xs, &ys)?;
            let exact_p = if exact { Some(stats::ks_exact_p(&xs, &ys)?) } else { None };
            #[derive(Serialize)]
            struct Report {
                d: f64,
                p: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                exact_p: Option<f64>,
                n: usize,
                m: usize,
            }
            let report = Report {
                d: r.d,
                p: r.p,
                exact_p,
                n: xs.len(),
                m: ys.len(),
            };
            emit(json, &report, || {
                let mut t = Table::new(["statistic", "value"]);
                t.row(["D".to_string(), num(report.d)]);
                t.row(["p (asymptotic)".to_string(), num(report.p)]);
                if let Some(p) = report.exact_p {
                    t.row(["p (exact)".to_string(), num(p)]);
                }
                t.row(["n, m".to_string(), format!("{}, {}", report.n, report.m)]);
                t.render()
            });
        }
        Command::Kw { input, exact } => {
            let (names, groups) = named_groups(&input)?;
            let r = stats::kruskal_wallis(&groups)?;
            let exact_p = if exact { Some(stats::kruskal_wallis_exact_p(&groups)?) } else { None };
            #[derive(Serialize)]
            struct Report {
                h: f64,
                df: usize,
                p: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                exact_p: Option<f64>,
                groups: Vec<String>,
            }
            let report = Report {
                h: r.h,
                df: r.df,
                p: r.p,
                exact_p,
                groups: names,
            };
            emit(json, &report, || {
                let mut t = Table::new(["statistic", "value"]);
                t.row(["H".to_string(), num(report.h)]);
                t.row(["df".to_string(), report.df.to_string()]);
                t.row(["p (chi-square)".to_string(), num(report.p)]);
                if let Some(p) = report.exact_p {
                    t.row(["p (exact)".to_string(), num(p)]);
                }
                t.render()
            });
        }
        Command::Dunn { input, alpha } => {
            let (names, groups) = named_groups(&input)?;
            let pairs = stats::dunn_posthoc(&groups)?;
            let p: Vec<f64> = pairs.iter().map(|x| x.p).collect();
            let reject = stats::holm_bonferroni(&p, alpha)?;
            #[derive(Serialize)]
            struct Row {
                a: String,
                b: String,
                z: f64,
                p: f64,
                reject_holm: bool,
            }
            let rows: Vec<Row> = pairs
                .iter()
                .zip(reject)
                .map(|(x, r)| Row {
                    a: names[x.a].clone(),
                    b: names[x.b].clone(),
                    z: x.z,
                    p: x.p,
                    reject_holm: r,
                })
                .collect();
            emit(json, &rows, || {
                let mut t = Table::new(["a", "b", "z", "p", "reject (Holm)"]);
                for r in &rows {
                    t.row([r.a.clone(), r.b.clone(), num(r.z), num(r.p), r.reject_holm.to_string()]);
                }
                t.render()
            });
        }
        Command::Holm { p, input, alpha } => {
            let pvals = match (p, input) {
                (Some(list), _) => input::list(&list)?,
                (None, Some(path)) => input::numbers(&path)?,
                (None, None) => return Err(CliError::Input("give --p or --input".into())),
            };
            let reject = stats::holm_bonferroni(&pvals, alpha)?;
            #[derive(Serialize)]
            struct Row {
                p: f64,
                reject: bool,
            }
            let rows: Vec<Row> = pvals.iter().zip(&reject).map(|(&p, &r)| Row { p, reject: r }).collect();
            emit(json, &rows, || {
                let mut t = Table::new(["p", "reject"]);
                for r in &rows {
                    t.row([num(r.p), r.reject.to_string()]);
                }
                t.render()
            });
        }
        Command::Ablate {
            premise,
            script,
            seed,
            out,
            data_dir,
            provider,
        } => {
            let premise = store(data_dir.as_ref())?.get(&premise)?;
            let turns = input::lines(&script)?;
            let sheet = ablation::run_ablation(&provider.pipeline()?, premise, &turns, seed)?;
            let mut buf = Vec::new();
            ablation::write_worksheet(&mut buf, &sheet.rows)?;
            write_output(out.as_ref(), &String::from_utf8(buf).expect("csv is UTF-8"))?;
            info!(rows = sheet.rows.len(), seed, "worksheet written");
        }
        Command::IngestRanks { worksheet, seed, out } => {
            let records = ablation::ingest_ranks(&input::worksheet_ranks(&worksheet)?, seed)?;
            let text: String = records
                .iter()
                .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
                .collect();
            write_output(out.as_ref(), &text)?;
        }
        Command::Serve {
            listen,
            data_dir,
            provider,
        } => {
            let state = rehearsal_api::AppState::new(provider.pipeline()?, store(data_dir.as_ref())?);
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(CliError::Server)?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(listen).await?;
                rehearsal_api::serve(listener, state).await
            })
            .map_err(CliError::Server)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
