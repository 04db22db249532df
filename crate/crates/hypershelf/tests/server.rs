mod support;

use hypershelf::core::explore;
use hypershelf::pipeline::Project;
use support::{encode, get, Running};

#[tokio::test(flavor = "multi_thread")]
async fn endpoints_answer_with_valid_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let config = support::trained_project(dir.path(), &[5], 50, 1);
    let server = Running::start(&config, false).await;
    support::check_endpoints(&server, 5, false).await.unwrap();
    let with_text = Running::start(&config, true).await;
    support::check_endpoints(&with_text, 5, true).await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn rankings_are_the_library_rankings() {
    let dir = tempfile::tempdir().unwrap();
    let config = support::trained_project(dir.path(), &[4, 6], 30, 5);
    let (corpus, suite) = Project::open(&config).unwrap().load_suite().unwrap();
    let server = Running::start(&config, false).await;
    let model = suite.get(6).unwrap();
    let focal = &corpus.documents()[3].id;

    let expected = explore::similar_documents(&corpus, model, focal, 12).unwrap();
    let (_, body) = get(&server.url(&format!("/api/6/doc/{}/similar?limit=12", encode(focal)))).await;
    let ids: Vec<&str> = body["docs"].as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    let want: Vec<&str> = expected.iter().map(|r| r.doc_id.as_str()).collect();
    assert_eq!(ids, want);

    let expected = explore::top_documents_for_topic(&corpus, model, 2, 7).unwrap();
    let (_, body) = get(&server.url("/api/6/topic/2/docs?limit=7")).await;
    let ids: Vec<&str> = body["docs"].as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    let want: Vec<&str> = expected.iter().map(|r| r.doc_id.as_str()).collect();
    assert_eq!(ids, want);

    let (_, pseudo_ranked) = explore::term_search(&corpus, model, &["仁", "礼"], 9).unwrap();
    let (_, body) = get(&server.url(&format!("/api/6/search?q={}&limit=9", encode("仁，礼")))).await;
    let ids: Vec<&str> = body["docs"].as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    let want: Vec<&str> = pseudo_ranked.iter().map(|r| r.doc_id.as_str()).collect();
    assert_eq!(ids, want);

    let (_, body) = get(&server.url("/api/map")).await;
    assert_eq!(body["points"].as_array().unwrap().len(), 10);
}

#[tokio::test(flavor = "multi_thread")]
async fn autocomplete_matches_label_substrings() {
    let dir = tempfile::tempdir().unwrap();
    let config = support::trained_project(dir.path(), &[3], 5, 1);
    let server = Running::start(&config, false).await;
    let (status, body) = get(&server.url(&format!("/api/docs?q={}", encode("庄子")))).await;
    assert_eq!(status, 200);
    let labels: Vec<&str> = body["docs"].as_array().unwrap().iter().map(|d| d["label"].as_str().unwrap()).collect();
    assert_eq!(labels.len(), 3);
    assert!(labels.iter().all(|l| l.contains("庄子")));
}

#[tokio::test(flavor = "multi_thread")]
async fn second_bind_on_a_used_port_is_port_in_use() {
    use hypershelf::server::{AppState, Server, ServiceConfig};
    let dir = tempfile::tempdir().unwrap();
    let config = support::trained_project(dir.path(), &[3], 5, 1);
    let project = Project::open(&config).unwrap();
    let mut service = ServiceConfig {
        host: "127.0.0.1".into(),
        port: 0,
        fulltext: false,
        static_dir: None,
        layout: Default::default(),
    };
    let first = Server::bind(AppState::load(&project, &service).unwrap(), &service).await.unwrap();
    service.port = first.local_addr().unwrap().port();
    let err = Server::bind(AppState::load(&project, &service).unwrap(), &service).await.err().unwrap();
    assert_eq!(err.kind(), "PortInUse");
}
