use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use super::config::{KRule, KSpec, PipelineConfig};
use super::evaluate::evaluate_accuracy;
use super::teams::form_teams;
use super::{associate, build_profiles, AssociationSettings, CandidateProfile};
use crate::cluster::{
    agglomerative_similarity, compare_memberships, kmeans_best, pca, select_k_elbow, select_k_silhouette,
    spectral_cluster, ClusterAssignment, Method, SimilarityMatrix, ELBOW_RESTARTS,
};
use crate::error::{Error, Result, Stage, StageExt};
use crate::graph::{core_theme, graph_matrix, CandidateGraph, FeatureSpec, GraphDocument};
use crate::survey::{encode_mcq, load_survey, validate_dataset, PointMatrix};
use crate::text::{load_embeddings, stopwords, EmbeddingTable, TextConfig};

pub const MANIFEST: &str = "manifest.json";

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output: PathBuf,
    pub through: Stage,
    /// Written files, relative to `output`, sorted.
    pub files: Vec<String>,
    pub k: Option<usize>,
    /// Team accuracy against dataset labels, when labels exist.
    pub accuracy: Option<f64>,
    /// Rand index between k-means and spectral memberships.
    pub kmeans_spectral_rand: Option<f64>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    status: &'a str,
    through: &'a str,
    failed_stage: Option<&'a str>,
    error: Option<String>,
    seed: u64,
    candidates: Option<usize>,
    k: Option<usize>,
    k_rule: &'a str,
    accuracy: Option<f64>,
    files: Vec<String>,
}

struct Outputs {
    root: PathBuf,
    files: BTreeSet<String>,
}

impl Outputs {
    fn write<F>(&mut self, rel: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        self.files.insert(rel.to_string());
        Ok(())
    }
}

/// Everything a completed run knows; filled in stage by stage.
#[derive(Default)]
struct State {
    candidates: Option<usize>,
    k: Option<usize>,
    accuracy: Option<f64>,
    rand: Option<f64>,
}

/// Runs every stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    run_until(cfg, Stage::Evaluate)
}

/// Runs the pipeline through `through`, writing each completed stage's
/// artifacts and a manifest under `cfg.output`. On failure the manifest is
/// still written, marked partial, and the error carries the failing stage.
pub fn run_until(cfg: &PipelineConfig, through: Stage) -> Result<RunSummary> {
    let mut out = Outputs {
        root: cfg.output.clone(),
        files: BTreeSet::new(),
    };
    let mut state = State::default();
    let result = stages(cfg, through, &mut out, &mut state);

    let k_rule = match cfg.k {
        KSpec::Fixed(_) => "fixed",
        KSpec::Select(KRule::Elbow) => "elbow",
        KSpec::Select(KRule::Silhouette) => "silhouette",
    };
    let mut files: Vec<String> = out.files.iter().cloned().collect();
    files.push(MANIFEST.to_string());
    files.sort();
    let failed = result.as_ref().err();
    let manifest = Manifest {
        status: if failed.is_some() { "partial" } else { "complete" },
        through: through.as_str(),
        failed_stage: failed.and_then(Error::stage).map(Stage::as_str),
        error: failed.map(ToString::to_string),
        seed: cfg.seed,
        candidates: state.candidates,
        k: state.k,
        k_rule,
        accuracy: state.accuracy,
        files: files.clone(),
    };
    let written = out.write(MANIFEST, |buf| {
        serde_json::to_writer_pretty(&mut *buf, &manifest)?;
        buf.push(b'\n');
        Ok(())
    });
    // a stage failure takes precedence over a failure to record it
    result?;
    written.stage(Stage::Config)?;
    Ok(RunSummary {
        output: cfg.output.clone(),
        through,
        files,
        k: state.k,
        accuracy: state.accuracy,
        kmeans_spectral_rand: state.rand,
    })
}

fn file_stem(i: usize, id: &str) -> String {
    let safe: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{i:03}_{safe}")
}

fn load_inputs(cfg: &PipelineConfig) -> Result<(TextConfig, EmbeddingTable)> {
    cfg.validate()?;
    if !cfg.survey.is_file() {
        return Err(Error::io(&cfg.survey, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let mut text = TextConfig::default();
    if let Some(p) = &cfg.stop_words {
        text.stop_words = stopwords::load(p)?;
    }
    let table = load_embeddings(&cfg.embeddings).map_err(|e| match e {
        Error::Format { line, message } => Error::Format {
            line,
            message: format!("{}: {message}", cfg.embeddings.display()),
        },
        other => other,
    })?;
    let table = if cfg.stem_vocabulary {
        table.rekeyed(|t| text.normalize_term(t))
    } else {
        table
    };
    fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    Ok((text, table))
}

fn stages(cfg: &PipelineConfig, through: Stage, out: &mut Outputs, state: &mut State) -> Result<()> {
    let (text, table) = load_inputs(cfg).stage(Stage::Config)?;
    if through == Stage::Config {
        return Ok(());
    }

    let ds = load_survey(&cfg.survey).stage(Stage::Ingest)?;
    let ids = ds.candidate_ids();
    state.candidates = Some(ids.len());
    if through == Stage::Ingest {
        return Ok(());
    }

    let report = validate_dataset(&ds);
    out.write("validation.csv", |b| report.write_csv(&ds, b)).stage(Stage::Validate)?;
    if report.has_errors(&ds) {
        return Err(Error::Input(format!(
            "dataset has validation errors ({} issues); see validation.csv",
            report.issue_count()
        )))
        .stage(Stage::Validate);
    }
    if through == Stage::Validate {
        return Ok(());
    }

    let points = (|| {
        let raw = encode_mcq(&ds, false)?;
        out.write("mcq_encoded.csv", |b| raw.write_csv(b))?;
        let points = encode_mcq(&ds, cfg.standardize)?;
        out.write("points.csv", |b| points.write_csv(b))?;
        Ok(points)
    })()
    .stage(Stage::Encode)?;
    if through == Stage::Encode {
        return Ok(());
    }

    let settings = AssociationSettings {
        features: if cfg.features.is_empty() {
            FeatureSpec::one_hot(&ds.questions)
        } else {
            cfg.features.clone()
        },
        weights: cfg.weights,
        top_n: cfg.top_n,
        match_threshold: cfg.match_threshold,
        text,
    };
    let profiles = (|| {
        let profiles = build_profiles(&ds, &settings)?;
        write_features(out, &settings, &profiles)?;
        Ok(profiles)
    })()
    .stage(Stage::Featurize)?;
    if through == Stage::Featurize {
        return Ok(());
    }

    write_graphs(out, &profiles).stage(Stage::Graphs)?;
    if through == Stage::Graphs {
        return Ok(());
    }

    let assoc = (|| {
        let assoc = associate(&profiles, &table, &settings)?;
        out.write("association.csv", |b| assoc.matrix.write_csv(&ids, b))?;
        out.write("association_pairs.csv", |b| assoc.write_pairs_csv(b))?;
        Ok(assoc)
    })()
    .stage(Stage::Associate)?;
    if through == Stage::Associate {
        return Ok(());
    }

    // k-means, k selection and PCA work on the MCQ encoding; a survey with
    // no MCQ questions falls back to rows of the association matrix
    let points = if points.dim() > 0 {
        points
    } else {
        let cols = ids.iter().map(|id| format!("assoc_{id}")).collect();
        PointMatrix::new(cols, ids.clone(), assoc.matrix.to_rows()).stage(Stage::SelectK)?
    };
    let k = (|| match cfg.k {
        KSpec::Fixed(k) => {
            if k > ids.len() {
                return Err(Error::Parameter(format!("k = {k} exceeds {} candidates", ids.len())));
            }
            Ok(k)
        }
        KSpec::Select(rule) => {
            let report = match rule {
                KRule::Elbow => select_k_elbow(&points, cfg.k_max, cfg.seed)?,
                KRule::Silhouette => select_k_silhouette(&points, cfg.k_max, cfg.seed)?,
            };
            out.write("k_selection.csv", |b| report.write_csv(b))?;
            Ok(report.chosen)
        }
    })()
    .stage(Stage::SelectK)?;
    state.k = Some(k);
    if through == Stage::SelectK {
        return Ok(());
    }

    let assignments = cluster_all(out, &points, &assoc.matrix, &ids, k, cfg.seed).stage(Stage::Cluster)?;
    if through == Stage::Cluster {
        return Ok(());
    }

    (|| {
        let report = compare_memberships(&assignments, &ids)?;
        state.rand = report.rand_between(Method::KMeans.tag(), Method::Spectral.tag());
        out.write("memberships.csv", |b| report.write_table_csv(b))?;
        out.write("memberships_long.csv", |b| report.write_long_csv(b))?;
        out.write("rand_index.csv", |b| report.write_rand_csv(b))
    })()
    .stage(Stage::Compare)?;
    if through == Stage::Compare {
        return Ok(());
    }

    let teams = (|| {
        let teams = form_teams(&assoc.matrix, k, cfg.seed)?;
        let themes: Vec<String> = teams.teams().iter().map(|m| team_theme(&profiles, m)).collect();
        out.write("teams.csv", |b| teams.write_csv(&ids, &themes, b))?;
        Ok(teams)
    })()
    .stage(Stage::Teams)?;
    if through == Stage::Teams {
        return Ok(());
    }

    if let Some(truth) = &ds.labels {
        (|| {
            let report = evaluate_accuracy(teams.labels(), &ids, truth)?;
            state.accuracy = Some(report.accuracy);
            out.write("accuracy.csv", |b| report.write_csv(b))?;
            let mut rows = Vec::new();
            for a in &assignments {
                rows.push((a.method().tag(), evaluate_accuracy(a.labels(), &ids, truth)?.accuracy));
            }
            rows.push(("teams", report.accuracy));
            out.write("accuracy_by_method.csv", |b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["method", "accuracy"])?;
                for (m, a) in &rows {
                    w.write_record([*m, &a.to_string()])?;
                }
                w.flush().map_err(|e| Error::io("<csv>", e))
            })
        })()
        .stage(Stage::Evaluate)?;
    }
    Ok(())
}

fn write_features(out: &mut Outputs, settings: &AssociationSettings, profiles: &[CandidateProfile]) -> Result<()> {
    out.write("features.csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        let mut header = vec!["candidate_id".to_string()];
        header.extend(settings.features.iter().map(|f| f.name.clone()));
        w.write_record(&header)?;
        for p in profiles {
            let mut rec = vec![p.id.clone()];
            rec.extend(p.features.0.iter().map(|(_, v)| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    })?;
    out.write("context_vectors.csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["candidate_id", "term", "score"])?;
        for p in profiles {
            p.context.write_csv_rows(&p.id, &mut w)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    })
}

fn write_graphs(out: &mut Outputs, profiles: &[CandidateProfile]) -> Result<()> {
    #[derive(Serialize)]
    struct Entry<'a> {
        candidate_id: &'a str,
        mcq: Option<GraphDocument<'a>>,
        text: Option<GraphDocument<'a>>,
    }
    let mut docs = Vec::with_capacity(profiles.len());
    for (i, p) in profiles.iter().enumerate() {
        let stem = file_stem(i, &p.id);
        for (kind, g) in [("mcq", &p.mcq_graph), ("text", &p.text_graph)] {
            if let Some(g) = g {
                write_graph(out, &format!("graphs/{stem}.{kind}"), &p.id, g)?;
            }
        }
        docs.push(Entry {
            candidate_id: &p.id,
            mcq: p.mcq_graph.as_ref().map(CandidateGraph::to_document),
            text: p.text_graph.as_ref().map(CandidateGraph::to_document),
        });
    }
    out.write("graphs.json", |b| {
        serde_json::to_writer_pretty(&mut *b, &docs)?;
        b.push(b'\n');
        Ok(())
    })
}

fn write_graph(out: &mut Outputs, base: &str, id: &str, g: &CandidateGraph) -> Result<()> {
    out.write(&format!("{base}.dot"), |b| {
        b.extend_from_slice(g.to_dot(id).as_bytes());
        Ok(())
    })?;
    let labels: Vec<String> = g.nodes().iter().map(|n| n.id.clone()).collect();
    out.write(&format!("{base}.matrix.csv"), |b| graph_matrix(g).write_csv(&labels, b))
}

fn cluster_all(
    out: &mut Outputs,
    points: &PointMatrix,
    sim: &SimilarityMatrix,
    ids: &[String],
    k: usize,
    seed: u64,
) -> Result<Vec<ClusterAssignment>> {
    let km = kmeans_best(points, k, seed, ELBOW_RESTARTS)?.assignment;
    let sp = spectral_cluster(sim, k, seed)?;
    let ag = agglomerative_similarity(sim, k)?;
    out.write("clusters/kmeans.csv", |b| km.write_csv(ids, b))?;
    out.write("clusters/spectral.csv", |b| sp.write_csv(ids, b))?;
    out.write("clusters/agglomerative.csv", |b| ag.write_csv(ids, b))?;

    let n_comp = 2.min(points.n_rows()).min(points.dim());
    if n_comp >= 1 {
        let p = pca(points, n_comp)?;
        let proj = p.transform(points)?;
        out.write("pca_projection.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            let mut header = vec!["candidate_id".to_string()];
            header.extend((1..=n_comp).map(|c| format!("pc{c}")));
            header.extend(["kmeans", "spectral"].map(String::from));
            w.write_record(&header)?;
            for (i, id) in ids.iter().enumerate() {
                let mut rec = vec![id.clone()];
                rec.extend(proj[i].iter().map(|v| v.to_string()));
                rec.push(km.labels()[i].to_string());
                rec.push(sp.labels()[i].to_string());
                w.write_record(&rec)?;
            }
            w.flush().map_err(|e| Error::io("<csv>", e))
        })?;
        out.write("pca_components.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            let mut header = vec!["component".to_string(), "explained_variance_ratio".to_string()];
            header.extend(points.columns().iter().cloned());
            w.write_record(&header)?;
            for (c, comp) in p.components.iter().enumerate() {
                let mut rec = vec![format!("pc{}", c + 1), p.explained_variance_ratio[c].to_string()];
                rec.extend(comp.iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
            w.flush().map_err(|e| Error::io("<csv>", e))
        })?;
    }
    Ok(vec![km, sp, ag])
}

/// Core theme of a team: the heaviest node after summing members' normalized
/// text-graph weights, or MCQ-graph weights when no member wrote text.
fn team_theme(profiles: &[CandidateProfile], members: &[usize]) -> String {
    let pick = |graph: fn(&CandidateProfile) -> &Option<CandidateGraph>| {
        let mut totals: std::collections::BTreeMap<&str, f64> = Default::default();
        for &i in members {
            if let Some(g) = graph(&profiles[i]) {
                for (n, w) in g.nodes().iter().zip(g.normalized_weights()) {
                    *totals.entry(n.id.as_str()).or_default() += w;
                }
            }
        }
        core_theme(totals).ok()
    };
    pick(|p| &p.text_graph).or_else(|| pick(|p| &p.mcq_graph)).unwrap_or_default()
}
