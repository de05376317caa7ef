//! Drives one service session through its stages with in-process HTTP requests, the same
//! calls a browser client makes against `arcell serve`.

use arcell::service::{router, AppState};
use arcell::sim::SceneSpec;
use arcell_core::geom::{Pose, RigidTransform};
use arcell_core::kin::{fk, robot_model, JointState};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use nalgebra::Vector3;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .expect("valid request");
    let res = app.clone().oneshot(req).await.expect("router is infallible");
    let status = res.status();
    let bytes = res.into_body().collect().await.expect("body").to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::main]
async fn main() {
    let store = std::env::temp_dir().join("arcell-example-sessions");
    let app = router(AppState::new(store));

    let (_, s) = call(&app, Method::POST, "/session", json!({})).await;
    let id = s["id"].as_u64().expect("session id");
    println!("session {id}: stage {}", s["stage"]);

    // planning before referencing is refused with the missing step named
    let (status, err) = call(&app, Method::POST, &format!("/session/{id}/plan"), json!({})).await;
    println!("plan too early: {status} {}", err["error"]);

    // the hologram is dropped a few centimeters off the real robot
    let seed = RigidTransform::from_translation(Vector3::new(0.03, -0.02, 0.01)).compose(&SceneSpec::demo().true_robot_pose);
    let (_, r) = call(&app, Method::POST, &format!("/session/{id}/reference"), json!({ "seed": Pose::from(&seed) })).await;
    println!("referenced: error vs truth {}", r["error_vs_truth"]);

    let (_, s) = call(&app, Method::POST, &format!("/session/{id}/map"), json!({ "resolution": 0.05 })).await;
    println!("mapped: stage {}", s["stage"]);

    let chain = robot_model("kr6_like").expect("bundled model");
    for (wp, q) in [("a", [-0.8, 0.6, 0.3, 0.0, 0.6, 0.0]), ("b", [0.7, 0.5, 0.4, 0.0, 0.5, 0.0])] {
        let target = *fk(&chain, &JointState::new(q.to_vec())).expect("fk").last().expect("tool");
        let body = json!({ "op": "add", "waypoint": { "id": wp, "kind": "free_space", "target": Pose::from(&target) } });
        let (status, _) = call(&app, Method::POST, &format!("/session/{id}/waypoints"), body).await;
        println!("waypoint {wp}: {status}");
    }

    let (_, s) = call(&app, Method::POST, &format!("/session/{id}/plan"), json!({ "wait": true })).await;
    println!("planned: stage {}", s["stage"]);
    let (_, e) = call(&app, Method::POST, &format!("/session/{id}/execute"), json!({ "realtime": false })).await;
    println!("execution: {} frames over {:.2} s", e["frames"], e["duration"].as_f64().unwrap_or(0.0));

    let (_, view) = call(&app, Method::GET, &format!("/session/{id}/scene"), Value::Null).await;
    println!(
        "scene view in the {} frame: {} mesh vertices, {} trajectory samples",
        view["frame"],
        view["mesh"]["vertices"].as_array().map_or(0, Vec::len),
        view["trajectory"]["samples"].as_array().map_or(0, Vec::len)
    );
}
