//! Read-only asset service for the overlay tool. Every asset carries its
//! SHA-256 as a strong ETag; the only write is appending confirmations to
//! the trial log.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{Any, CorsLayer};

use tablescene::metrics::{parse_confirmations, ReplicationConfirmation};
use tablescene::render::bundle::METADATA_FILE;
use tablescene::render::OverlayBundle;
use tablescene::seed::digest_hex;

use crate::args::ServeArgs;
use crate::manifest::{RunManifest, MANIFEST_FILE};

pub const BUNDLE_DIR: &str = "bundles";
pub const TRIAL_LOG: &str = "trial_log.jsonl";

#[derive(Debug, Clone)]
struct Asset {
    bytes: Bytes,
    etag: String,
    content_type: &'static str,
}

impl Asset {
    fn new(bytes: Vec<u8>, content_type: &'static str) -> Self {
        Self {
            etag: format!("\"{}\"", digest_hex(&bytes)),
            bytes: bytes.into(),
            content_type,
        }
    }

    fn respond(&self, req: &HeaderMap) -> Response {
        let etag = HeaderValue::from_str(&self.etag).expect("hex etag is a valid header");
        let fresh = req
            .get(header::IF_NONE_MATCH)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|v| v.split(',').any(|t| t.trim() == self.etag || t.trim() == "*"));
        let headers = [
            (header::ETAG, etag),
            (header::CACHE_CONTROL, HeaderValue::from_static("no-cache")),
        ];
        if fresh {
            return (StatusCode::NOT_MODIFIED, headers).into_response();
        }
        (
            StatusCode::OK,
            headers,
            [(header::CONTENT_TYPE, HeaderValue::from_static(self.content_type))],
            self.bytes.clone(),
        )
            .into_response()
    }
}

#[derive(Debug, Clone)]
struct SceneAssets {
    overlay: Asset,
    image: Asset,
    masks: Vec<Asset>,
}

#[derive(Debug, Clone, Serialize)]
struct Link {
    href: String,
    etag: String,
}

#[derive(Debug, Clone, Serialize)]
struct ObjectEntry {
    index: usize,
    object_id: String,
    display_name: String,
}

#[derive(Debug, Clone, Serialize)]
struct SceneEntry {
    id: String,
    objects: Vec<ObjectEntry>,
    overlay: Link,
    image: Link,
    masks: Vec<Link>,
    confirm: String,
}

struct ConfirmLog {
    path: PathBuf,
    seen: HashMap<(String, String), ReplicationConfirmation>,
}

pub struct AppState {
    scenes: BTreeMap<String, SceneAssets>,
    list: Asset,
    log: Mutex<ConfirmLog>,
}

fn bundle_file(b: &OverlayBundle, name: &str) -> Result<Vec<u8>> {
    if name == METADATA_FILE {
        return Ok(b.metadata_json()?.into_bytes());
    }
    Ok(b.file(name).with_context(|| format!("bundle {} lacks {name}", b.metadata.scene_id))?.to_vec())
}

/// Loads every bundle under `<dir>/bundles`, checking each file against the
/// manifest digests when `<dir>/manifest.json` exists.
pub fn load_state(dir: &Path, trial_log: Option<&Path>) -> Result<AppState> {
    let manifest_file = dir.join(MANIFEST_FILE);
    let manifest = if manifest_file.exists() {
        Some(RunManifest::load(&manifest_file)?)
    } else {
        None
    };
    let root = dir.join(BUNDLE_DIR);
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&root)
        .with_context(|| format!("reading {}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(METADATA_FILE).exists())
        .collect();
    dirs.sort();

    let mut scenes = BTreeMap::new();
    let mut entries = Vec::new();
    for d in dirs {
        let b = OverlayBundle::read(&d)?;
        let id = b.metadata.scene_id.clone();
        let asset = |name: &str, ct: &'static str| -> Result<Asset> {
            let a = Asset::new(bundle_file(&b, name)?, ct);
            if let Some(m) = &manifest {
                let rel = d.strip_prefix(dir).unwrap_or(&d).join(name);
                if let Some(expected) = m.digest_of(dir, &rel) {
                    if format!("\"{expected}\"") != a.etag {
                        bail!("{} does not match its manifest digest", rel.display());
                    }
                }
            }
            Ok(a)
        };
        let overlay = asset(METADATA_FILE, "application/json")?;
        let image = asset(&b.metadata.color_image, "image/png")?;
        let masks = b
            .metadata
            .objects
            .iter()
            .map(|o| asset(&o.silhouette, "image/png"))
            .collect::<Result<Vec<_>>>()?;
        let link = |suffix: &str, a: &Asset| Link {
            href: format!("/scenes/{id}/{suffix}"),
            etag: a.etag.clone(),
        };
        entries.push(SceneEntry {
            id: id.clone(),
            objects: b
                .metadata
                .objects
                .iter()
                .map(|o| ObjectEntry {
                    index: o.index,
                    object_id: o.object_id.clone(),
                    display_name: o.display_name.clone(),
                })
                .collect(),
            overlay: link("overlay", &overlay),
            image: link("image", &image),
            masks: masks.iter().enumerate().map(|(k, a)| link(&format!("masks/{k}"), a)).collect(),
            confirm: format!("/scenes/{id}/confirm"),
        });
        scenes.insert(id, SceneAssets { overlay, image, masks });
    }

    let log_path = trial_log.map(Path::to_path_buf).unwrap_or_else(|| dir.join(TRIAL_LOG));
    let mut seen = HashMap::new();
    if log_path.exists() {
        let text = std::fs::read_to_string(&log_path).with_context(|| format!("reading {}", log_path.display()))?;
        for c in parse_confirmations(&text).with_context(|| log_path.display().to_string())? {
            seen.insert((c.scene_id.clone(), c.session.clone()), c);
        }
    }
    Ok(AppState {
        scenes,
        list: Asset::new(serde_json::to_vec_pretty(&entries)?, "application/json"),
        log: Mutex::new(ConfirmLog { path: log_path, seen }),
    })
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::IF_NONE_MATCH])
        .expose_headers([header::ETAG]);
    Router::new()
        .route("/scenes", get(list))
        .route("/scenes/{id}/overlay", get(overlay))
        .route("/scenes/{id}/image", get(image))
        .route("/scenes/{id}/masks/{k}", get(mask))
        .route("/scenes/{id}/confirm", post(confirm))
        .layer(cors)
        .with_state(state)
}

fn not_found(what: String) -> Response {
    (StatusCode::NOT_FOUND, axum::Json(json!({ "error": what }))).into_response()
}

fn scene<'a>(state: &'a AppState, id: &str) -> Result<&'a SceneAssets, Response> {
    state.scenes.get(id).ok_or_else(|| not_found(format!("no scene {id}")))
}

async fn list(State(st): State<Arc<AppState>>, headers: HeaderMap) -> Response {
    st.list.respond(&headers)
}

async fn overlay(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> Response {
    match scene(&st, &id) {
        Ok(s) => s.overlay.respond(&headers),
        Err(r) => r,
    }
}

async fn image(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> Response {
    match scene(&st, &id) {
        Ok(s) => s.image.respond(&headers),
        Err(r) => r,
    }
}

async fn mask(
    State(st): State<Arc<AppState>>,
    UrlPath((id, k)): UrlPath<(String, usize)>,
    headers: HeaderMap,
) -> Response {
    match scene(&st, &id) {
        Ok(s) => match s.masks.get(k) {
            Some(a) => a.respond(&headers),
            None => not_found(format!("scene {id} has {} masks", s.masks.len())),
        },
        Err(r) => r,
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfirmBody {
    #[serde(default)]
    objects: Vec<usize>,
    #[serde(default)]
    session: String,
    confirmed_at: Option<u64>,
}

fn bad_request(msg: String) -> Response {
    (StatusCode::BAD_REQUEST, axum::Json(json!({ "error": msg }))).into_response()
}

async fn confirm(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: Bytes) -> Response {
    let assets = match scene(&st, &id) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let req: ConfirmBody = if body.iter().all(u8::is_ascii_whitespace) {
        ConfirmBody::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(b) => b,
            Err(e) => return bad_request(format!("confirmation body: {e}")),
        }
    };
    if !req.objects.is_empty() {
        let mut sorted = req.objects.clone();
        sorted.sort_unstable();
        if sorted != (0..assets.masks.len()).collect::<Vec<_>>() {
            return bad_request(format!("objects must list each of the {} placements once", assets.masks.len()));
        }
    }
    let confirmed_at = req
        .confirmed_at
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    let record = ReplicationConfirmation {
        scene_id: id.clone(),
        confirmed_at,
        objects: req.objects,
        session: req.session,
    };

    let mut log = st.log.lock().unwrap_or_else(|e| e.into_inner());
    let key = (id, record.session.clone());
    if let Some(prev) = log.seen.get(&key) {
        return (StatusCode::OK, axum::Json(json!({ "recorded": false, "confirmation": prev }))).into_response();
    }
    let appended = record.to_json_line().map_err(anyhow::Error::from).and_then(|line| {
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&log.path)?;
        writeln!(f, "{line}")?;
        f.sync_data()?;
        Ok(())
    });
    if let Err(e) = appended {
        return (StatusCode::INTERNAL_SERVER_ERROR, axum::Json(json!({ "error": format!("{e:#}") }))).into_response();
    }
    log.seen.insert(key, record.clone());
    (StatusCode::CREATED, axum::Json(json!({ "recorded": true, "confirmation": record }))).into_response()
}

pub fn run(a: &ServeArgs) -> Result<()> {
    let state = Arc::new(load_state(&a.dir, a.trial_log.as_deref())?);
    let count = state.scenes.len();
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&a.addr)
            .await
            .with_context(|| format!("binding {}", a.addr))?;
        eprintln!("serving {count} scenes on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
