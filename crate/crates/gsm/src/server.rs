//! The HTTP runtime. Routes:
//! `POST /{class}/new`, `POST /{class}/{method}`, `POST /{class}/{id}/{method}`.

use std::io;
use std::path::PathBuf;
use std::sync::{Arc, MutexGuard};
use std::thread::JoinHandle;

use svcplan_core::composition::{Composition, Target};
use tracing::{debug, info, warn};

use crate::choreography::{lookup, step_arguments, step_url};
use crate::client::{Client, ClientError};
use crate::service::{Context, Lookup, Registry, ServiceClass, ServiceError};
use crate::store::InstanceStore;
use crate::value::{parse_handle, Arguments, Value};
use crate::wire::{step_key, Request, Response};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GsmConfig {
    pub bind: String,
    /// 0 picks a free port.
    pub port: u16,
    pub store: PathBuf,
    /// Base URL for issued handles; defaults to `http://{bind}:{port}`.
    pub public_url: Option<String>,
}

impl Default for GsmConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            store: PathBuf::from("gsm-store"),
            public_url: None,
        }
    }
}

impl GsmConfig {
    /// Reads `GSM_BIND`, `GSM_PORT`, `GSM_STORE` and `GSM_PUBLIC_URL`, falling back
    /// to the defaults.
    pub fn from_env() -> Result<Self, String> {
        let mut c = Self::default();
        if let Ok(b) = std::env::var("GSM_BIND") {
            c.bind = b;
        }
        if let Ok(p) = std::env::var("GSM_PORT") {
            c.port = p.parse().map_err(|_| format!("GSM_PORT `{p}` is not a port number"))?;
        }
        if let Ok(s) = std::env::var("GSM_STORE") {
            c.store = PathBuf::from(s);
        }
        if let Ok(u) = std::env::var("GSM_PUBLIC_URL") {
            c.public_url = Some(u);
        }
        Ok(c)
    }
}

enum Route<'a> {
    Create { class: &'a str },
    Static { class: &'a str, method: &'a str },
    Instance { class: &'a str, id: u64, method: &'a str },
}

fn parse_route(path: &str) -> Option<Route<'_>> {
    let path = path.split('?').next().unwrap_or(path);
    let segments: Vec<&str> = path.trim_start_matches('/').split('/').collect();
    match segments.as_slice() {
        [class, "new"] if !class.is_empty() => Some(Route::Create { class }),
        [class, method] if !class.is_empty() && !method.is_empty() => Some(Route::Static { class, method }),
        [class, id, method] if !class.is_empty() && !method.is_empty() && !id.is_empty() && id.bytes().all(|b| b.is_ascii_digit()) => {
            Some(Route::Instance {
                class,
                id: id.parse().ok()?,
                method,
            })
        }
        _ => None,
    }
}

impl Route<'_> {
    fn class(&self) -> &str {
        match self {
            Route::Create { class } | Route::Static { class, .. } | Route::Instance { class, .. } => class,
        }
    }

    fn method(&self) -> &str {
        match self {
            Route::Create { .. } => "new",
            Route::Static { method, .. } | Route::Instance { method, .. } => method,
        }
    }
}

/// Shared state of a running service manager.
pub struct Gsm {
    registry: Registry,
    store: InstanceStore,
    public_url: String,
    client: Client,
}

type Reply = (u16, String);

fn reply(status: u16, body: &Response) -> Reply {
    (status, serde_json::to_string(body).expect("responses serialize"))
}

fn failure(status: u16, message: impl Into<String>, step: Option<usize>) -> Reply {
    reply(status, &Response::error(message, step))
}

fn lock(m: &std::sync::Mutex<()>) -> MutexGuard<'_, ()> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl Gsm {
    pub fn new(registry: Registry, store: InstanceStore, public_url: impl Into<String>) -> Self {
        Self {
            registry,
            store,
            public_url: public_url.into().trim_end_matches('/').to_string(),
            client: Client::new(),
        }
    }

    pub fn public_url(&self) -> &str {
        &self.public_url
    }

    /// Handles one request; returns status and JSON body.
    pub fn route(&self, method: &str, path: &str, body: &str) -> Reply {
        if !method.eq_ignore_ascii_case("POST") {
            return failure(405, "only POST is supported", None);
        }
        let Some(route) = parse_route(path) else {
            return failure(404, format!("no route for {path}"), None);
        };
        let class = match self.registry.lookup(route.class()) {
            Lookup::Enabled(c) => c.clone(),
            Lookup::Disabled => return failure(403, format!("class {} is disabled", route.class()), None),
            Lookup::Unknown => return failure(404, format!("unknown class {}", route.class()), None),
        };
        let request: Request = if body.trim().is_empty() {
            Request::default()
        } else {
            match serde_json::from_str(body) {
                Ok(r) => r,
                Err(e) => return failure(400, format!("malformed body: {e}"), None),
            }
        };
        if let Some((name, err)) = request.arguments.iter().find_map(|(n, v)| v.validate().err().map(|e| (n, e))) {
            return failure(400, format!("argument `{name}`: {err}"), None);
        }
        match request.composition {
            None => match self.execute(&route, class.as_ref(), &request.arguments) {
                Ok(v) => reply(200, &Response::ok(v)),
                Err(e) => failure(e.status(), e.to_string(), None),
            },
            Some(composition) => self.choreography_step(&route, class.as_ref(), composition, request.step_index.unwrap_or(0), request.arguments),
        }
    }

    fn execute(&self, route: &Route<'_>, class: &dyn ServiceClass, args: &Arguments) -> Result<Value, ServiceError> {
        let ctx = Context {
            client: &self.client,
            public_url: &self.public_url,
        };
        let io = |e: io::Error| ServiceError::Failed(format!("instance store: {e}"));
        match *route {
            Route::Create { class: name } => {
                if !class.constructible() {
                    return Err(ServiceError::UnknownMethod("new".into()));
                }
                let instance = class.construct(args, &ctx)?;
                let blob = instance.encode()?;
                let id = self.store.allocate(name).map_err(io)?;
                let m = self.store.lock(name, id);
                let _guard = lock(&m);
                self.store.save(name, id, &blob).map_err(io)?;
                debug!(class = name, id, "created instance");
                Ok(Value::Handle(format!("{}/{name}/{id}", self.public_url)))
            }
            Route::Static { method, .. } => class.invoke_static(method, args, &ctx),
            Route::Instance { class: name, id, method } => {
                let m = self.store.lock(name, id);
                let _guard = lock(&m);
                let blob = self.store.load(name, id).map_err(io)?;
                let Some(blob) = blob else {
                    return Err(ServiceError::UnknownInstance(format!("{name}/{id}")));
                };
                let mut instance = class.decode(&blob)?;
                let result = instance.invoke(method, args, &ctx)?;
                self.store.save(name, id, &instance.encode()?).map_err(io)?;
                Ok(result)
            }
        }
    }

    fn choreography_step(&self, route: &Route<'_>, class: &dyn ServiceClass, composition: Composition, i: usize, mut env: Arguments) -> Reply {
        let Some(step) = composition.steps.get(i) else {
            return failure(400, format!("step index {i} outside a composition of {} steps", composition.len()), Some(i));
        };
        if let Err(e) = composition.validate() {
            return failure(400, e.to_string(), Some(i));
        }
        let mismatch = || failure(400, format!("request route does not match composition step {i}"), Some(i));
        if route.class() != step.target.service() || route.method() != step.operation {
            return mismatch();
        }
        match (&step.target, route) {
            (Target::Static { .. }, Route::Instance { .. }) | (Target::Instance { .. }, Route::Static { .. } | Route::Create { .. }) => {
                return mismatch()
            }
            (Target::Instance { handle, .. }, Route::Instance { id, .. }) => {
                let handle_id = lookup(&env, handle).and_then(Value::as_handle).and_then(|h| parse_handle(h).ok()).map(|(_, _, id)| id);
                if handle_id != Some(*id) {
                    return mismatch();
                }
            }
            _ => {}
        }
        let args = match step_arguments(step, &env) {
            Ok(a) => a,
            Err(m) => return failure(400, m, Some(i)),
        };
        let result = match self.execute(route, class, &args) {
            Ok(v) => v,
            Err(e) => return failure(e.status(), e.to_string(), Some(i)),
        };
        if i + 1 == composition.len() {
            return reply(200, &Response::ok(result));
        }
        env.insert(step_key(i), result);
        let next = i + 1;
        let url = match step_url(&composition.steps[next], &env) {
            Ok(u) => u,
            Err(m) => return failure(400, m, Some(next)),
        };
        let forward = Request {
            arguments: env,
            composition: Some(composition),
            step_index: Some(next),
        };
        let body = serde_json::to_string(&forward).expect("requests serialize");
        match self.client.post_raw(&url, &body) {
            Ok(relayed) => relayed,
            Err(ClientError::Transport { message, .. }) => {
                warn!(%url, step = next, "next hop unreachable");
                failure(502, format!("next hop {url} unreachable: {message}"), Some(next))
            }
            Err(e) => failure(502, e.to_string(), Some(next)),
        }
    }
}

/// A GSM serving on a background thread.
pub struct RunningGsm {
    url: String,
    server: Arc<tiny_http::Server>,
    thread: Option<JoinHandle<()>>,
}

impl RunningGsm {
    pub fn url(&self) -> &str {
        &self.url
    }

    /// Stops accepting requests and waits for the accept loop to exit.
    pub fn shutdown(mut self) {
        self.stop();
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn stop(&mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for RunningGsm {
    fn drop(&mut self) {
        self.stop();
    }
}

pub fn start(config: &GsmConfig, registry: Registry) -> io::Result<RunningGsm> {
    let server = tiny_http::Server::http((config.bind.as_str(), config.port)).map_err(io::Error::other)?;
    let port = server.server_addr().to_ip().map(|a| a.port()).unwrap_or(config.port);
    let host = if config.bind == "0.0.0.0" { "127.0.0.1" } else { config.bind.as_str() };
    let url = config.public_url.clone().unwrap_or_else(|| format!("http://{host}:{port}"));
    let store = InstanceStore::open(&config.store)?;
    let gsm = Arc::new(Gsm::new(registry, store, url.clone()));
    let server = Arc::new(server);
    info!(%url, store = %config.store.display(), classes = ?gsm.registry.names().collect::<Vec<_>>(), "GSM listening");
    let accept = server.clone();
    let thread = std::thread::spawn(move || {
        for request in accept.incoming_requests() {
            let gsm = gsm.clone();
            std::thread::spawn(move || serve_one(&gsm, request));
        }
    });
    Ok(RunningGsm {
        url: url.trim_end_matches('/').to_string(),
        server,
        thread: Some(thread),
    })
}

fn serve_one(gsm: &Gsm, mut request: tiny_http::Request) {
    let mut body = String::new();
    let (status, text) = match request.as_reader().read_to_string(&mut body) {
        Ok(_) => gsm.route(request.method().as_str(), request.url(), &body),
        Err(e) => failure(400, format!("unreadable body: {e}"), None),
    };
    debug!(method = %request.method(), url = request.url(), status, "request");
    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
    let response = tiny_http::Response::from_string(text).with_status_code(status).with_header(header);
    if let Err(e) = request.respond(response) {
        warn!("cannot send response: {e}");
    }
}
