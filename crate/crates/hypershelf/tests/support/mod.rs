//! Project setup on the bundled mini-corpus and an in-process server.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::mpsc;

use hypershelf::core::topicmap::LayoutOptions;
use hypershelf::pipeline::{self, Project, Tokenizer, TrainOptions};
use hypershelf::server::{AppState, Server, ServiceConfig};
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};

pub fn mini_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/classics")
}

pub fn init(project_dir: &Path) -> PathBuf {
    pipeline::init(&mini_corpus(), Tokenizer::Ltc, 0, project_dir).unwrap().config_path
}

pub fn prep(config: &Path) {
    pipeline::prep(config, None, |_| Ok((1, None))).unwrap();
}

pub fn train(config: &Path, ks: &[usize], iterations: u32, seed: u64) {
    let opts = TrainOptions { topic_counts: ks.to_vec(), iterations, seed, alpha: None, beta: None };
    pipeline::train(config, &opts).unwrap();
}

/// init, prep and train in `project_dir`; returns the config path.
pub fn trained_project(project_dir: &Path, ks: &[usize], iterations: u32, seed: u64) -> PathBuf {
    let config = init(project_dir);
    prep(&config);
    train(&config, ks, iterations, seed);
    config
}

pub fn encode(s: &str) -> String {
    utf8_percent_encode(s, NON_ALPHANUMERIC).to_string()
}

/// A server on an ephemeral port, stopped on drop.
pub struct Running {
    pub base: String,
    stop: Option<mpsc::Sender<()>>,
}

impl Running {
    pub async fn start(config: &Path, fulltext: bool) -> Self {
        let project = Project::open(config).unwrap();
        let service = ServiceConfig {
            host: "127.0.0.1".into(),
            port: 0,
            fulltext,
            static_dir: None,
            layout: LayoutOptions::default(),
        };
        let state = AppState::load(&project, &service).unwrap();
        let server = Server::bind(state, &service).await.unwrap();
        let base = format!("http://{}", server.local_addr().unwrap());
        let (tx, rx) = mpsc::channel::<()>();
        let shutdown = async move {
            let _ = tokio::task::spawn_blocking(move || rx.recv()).await;
        };
        tokio::spawn(server.run(shutdown));
        Running { base, stop: Some(tx) }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
    }
}

pub async fn get(url: &str) -> (u16, serde_json::Value) {
    let resp = reqwest::get(url).await.unwrap();
    let status = resp.status().as_u16();
    let body = resp.json().await.unwrap_or(serde_json::Value::Null);
    (status, body)
}

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond { Ok(()) } else { Err(what.into()) }
}

fn is_distribution(v: &serde_json::Value, len: usize) -> bool {
    v.as_array().is_some_and(|a| {
        a.len() == len
            && a.iter().all(|x| x.as_f64().is_some_and(|p| (0.0..=1.0).contains(&p)))
            && (a.iter().filter_map(|x| x.as_f64()).sum::<f64>() - 1.0).abs() < 1e-9
    })
}

/// Requests every endpoint and checks status and response shape.
pub async fn check_endpoints(server: &Running, k: usize, fulltext: bool) -> Result<(), String> {
    let (status, body) = get(&server.url("/api/models")).await;
    check(status == 200 && body["ks"].as_array().is_some_and(|a| a.iter().any(|x| x == k)), "models")?;

    let (status, body) = get(&server.url("/api/docs?q=&limit=1000")).await;
    let docs = body["docs"].as_array().cloned().unwrap_or_default();
    check(status == 200 && !docs.is_empty(), "docs")?;
    let id = docs[0]["id"].as_str().ok_or("doc id")?.to_string();
    let enc = encode(&id);

    let (status, body) = get(&server.url(&format!("/api/{k}/doc/{enc}/topics"))).await;
    check(status == 200 && body["doc"]["id"] == id.as_str() && is_distribution(&body["topics"], k), "doc topics")?;

    let (status, body) = get(&server.url(&format!("/api/{k}/doc/{enc}/similar?limit=10"))).await;
    let similar = body["docs"].as_array().cloned().unwrap_or_default();
    check(status == 200 && similar.len() == 10, "similar count")?;
    check(similar[0]["id"] == id.as_str() && (similar[0]["similarity"].as_f64() == Some(1.0)), "similar focal first")?;
    let sims: Vec<f64> = similar.iter().filter_map(|d| d["similarity"].as_f64()).collect();
    check(sims.windows(2).all(|w| w[0] >= w[1]), "similar order")?;
    check(similar.iter().all(|d| is_distribution(&d["topics"], k)), "similar topics")?;

    let (status, body) = get(&server.url(&format!("/api/{k}/doc/{enc}/similar?limit=10&topic=0"))).await;
    let sorted: Vec<f64> =
        body["docs"].as_array().map(|a| a.iter().filter_map(|d| d["topics"][0].as_f64()).collect()).unwrap_or_default();
    check(status == 200 && sorted.len() == 10 && sorted.windows(2).all(|w| w[0] >= w[1]), "similar sorted by topic")?;

    for t in 0..k {
        let (status, body) = get(&server.url(&format!("/api/{k}/topic/{t}/words?n=15"))).await;
        let words = body["words"].as_array().cloned().unwrap_or_default();
        check(status == 200 && words.len() == 15, format!("topic {t} words"))?;
        let ps: Vec<f64> = words.iter().filter_map(|w| w["p"].as_f64()).collect();
        check(ps.windows(2).all(|w| w[0] >= w[1]), format!("topic {t} word order"))?;

        let (status, body) = get(&server.url(&format!("/api/{k}/topic/{t}/docs?limit=5"))).await;
        let props: Vec<f64> = body["docs"]
            .as_array()
            .map(|a| a.iter().filter_map(|d| d["proportion"].as_f64()).collect())
            .unwrap_or_default();
        check(status == 200 && props.len() == 5 && props.windows(2).all(|w| w[0] >= w[1]), format!("topic {t} docs"))?;
    }

    let (status, body) = get(&server.url(&format!("/api/{k}/search?q={}", encode("仁 道 不存在的词")))).await;
    check(status == 200, "search status")?;
    check(body["terms"].as_array().is_some_and(|t| t.len() == 2), "search terms")?;
    check(body["dropped"].as_array().is_some_and(|t| t.len() == 1), "search dropped")?;
    check(is_distribution(&body["topic_mix"], k), "search topic mix")?;
    check(body["docs"].as_array().is_some_and(|d| !d.is_empty()), "search docs")?;

    let (status, body) = get(&server.url("/api/map")).await;
    let points = body["points"].as_array().cloned().unwrap_or_default();
    check(status == 200 && points.len() == k, "map points")?;
    check(
        points.iter().all(|p| p["x"].is_number() && p["y"].is_number() && p["words"].as_array().is_some_and(|w| w.len() == 15)),
        "map point fields",
    )?;

    let (status, body) = get(&server.url(&format!("/api/map/saturation?term={}", encode("道")))).await;
    let weights: Vec<f64> = body["weights"]
        .as_array()
        .map(|a| a.iter().filter_map(|w| w["weight"].as_f64()).collect())
        .unwrap_or_default();
    check(status == 200 && weights.len() == k && weights.contains(&1.0), "saturation")?;

    let (status, body) = get(&server.url(&format!("/api/doc/{enc}/text"))).await;
    if fulltext {
        check(status == 200 && body["text"].as_str().is_some_and(|t| !t.is_empty()), "full text")?;
    } else {
        check(status == 404 && body["error"]["kind"].is_string(), "full text disabled")?;
    }

    let (status, body) = get(&server.url("/api/no/such/endpoint")).await;
    check(status == 404 && body["v"] == 1 && body["error"]["kind"] == "NotFound", "unknown endpoint")?;
    let (status, body) = get(&server.url(&format!("/api/{}/search?q=x", k + 1000))).await;
    check(status == 404 && body["error"]["kind"] == "ModelMissing", "missing model")?;
    let (status, body) = get(&server.url(&format!("/api/{k}/doc/{}/topics", encode("no such doc")))).await;
    check(status == 404 && body["error"]["kind"] == "UnknownDocument", "unknown document")?;
    Ok(())
}
