//! OpenAPI 3.1 description of the HTTP service. Schemas are kept coarse:
//! bodies are named and the field-level shapes live with the Rust types.

use serde_json::{json, Value};

fn body(schema: &str) -> Value {
    json!({
        "required": true,
        "content": { "application/json": { "schema": { "$ref": format!("#/components/schemas/{schema}") } } }
    })
}

fn upload() -> Value {
    json!({
        "required": true,
        "content": { "multipart/form-data": { "schema": {
            "type": "object",
            "required": ["file"],
            "properties": {
                "file": { "type": "string", "format": "binary" },
                "name": { "type": "string" },
                "domain": { "type": "string" },
                "schema_hints": { "type": "string", "description": "JSON object mapping column to continuous or categorical" }
            }
        } } }
    })
}

fn ok(schema: &str) -> Value {
    json!({
        "description": schema,
        "content": { "application/json": { "schema": { "$ref": format!("#/components/schemas/{schema}") } } }
    })
}

fn op(summary: &str, request: Option<Value>, status: &str, response: &str, battery: bool) -> Value {
    let mut responses = json!({ status: ok(response), "default": ok("ApiError") });
    if battery {
        responses["202"] = json!({ "description": "Queued when answers come from a live model; poll /jobs/{id}" });
    }
    let mut out = json!({ "summary": summary, "responses": responses });
    if let Some(r) = request {
        out["requestBody"] = r;
    }
    out
}

fn params(names: &[&str]) -> Value {
    names
        .iter()
        .map(|n| json!({ "name": n, "in": "path", "required": true, "schema": { "type": "string" } }))
        .collect()
}

pub fn document() -> Value {
    let object = json!({ "type": "object" });
    let schemas: serde_json::Map<String, Value> = [
        "ApiError",
        "ClientConfig",
        "ProjectSummary",
        "ProjectList",
        "ProjectDocument",
        "CausalModel",
        "DiscoverRequest",
        "DiscoverResponse",
        "EditRequest",
        "EditResponse",
        "DebateResponse",
        "EnvironmentRequest",
        "EnvironmentResponse",
        "LatentResponse",
        "ChildrenRequest",
        "ChildrenResponse",
        "SemResponse",
        "UploadResponse",
        "JobState",
    ]
    .iter()
    .map(|n| (n.to_string(), object.clone()))
    .collect();
    let mut schemas = Value::Object(schemas);
    schemas["ApiError"] = json!({
        "type": "object",
        "required": ["code", "message"],
        "properties": {
            "code": { "enum": ["bad_request", "not_found", "conflict", "llm_failure", "parse_failure", "internal"] },
            "message": { "type": "string" },
            "detail": {}
        }
    });
    schemas["EditRequest"] = json!({
        "type": "object",
        "required": ["op"],
        "properties": { "op": { "enum": ["direct", "remove", "add", "add_third", "add_latent"] } }
    });

    let m = "/projects/{p}/models/{m}";
    json!({
        "openapi": "3.1.0",
        "info": { "title": "causeway", "version": env!("CARGO_PKG_VERSION") },
        "paths": {
            "/config": { "get": op("Client configuration", None, "200", "ClientConfig", false) },
            "/projects": {
                "get": op("List projects", None, "200", "ProjectList", false),
                "post": op("Create a project from a CSV upload", Some(upload()), "201", "ProjectSummary", false)
            },
            "/projects/{p}": {
                "parameters": params(&["p"]),
                "get": op("Project summary", None, "200", "ProjectSummary", false)
            },
            "/projects/{p}/document": {
                "parameters": params(&["p"]),
                "get": op("Stored project document", None, "200", "ProjectDocument", false)
            },
            "/projects/{p}/dataset/columns": {
                "parameters": params(&["p"]),
                "post": op("Add row-aligned columns; matching hypothesized variables become measured", Some(upload()), "200", "UploadResponse", false)
            },
            m: {
                "parameters": params(&["p", "m"]),
                "get": op("Causal model", None, "200", "CausalModel", false)
            },
            format!("{m}/discover"): {
                "parameters": params(&["p", "m"]),
                "post": op("Structure search over the model's measured variables", Some(body("DiscoverRequest")), "200", "DiscoverResponse", false)
            },
            format!("{m}/edges"): {
                "parameters": params(&["p", "m"]),
                "patch": {
                    "summary": "Edit an edge or accept a finding; honours the Idempotency-Key header",
                    "parameters": [{ "name": "Idempotency-Key", "in": "header", "required": false, "schema": { "type": "string" } }],
                    "requestBody": body("EditRequest"),
                    "responses": { "200": ok("EditResponse"), "default": ok("ApiError") }
                }
            },
            format!("{m}/edges/{{e}}/debate"): {
                "parameters": params(&["p", "m", "e"]),
                "post": op("Ten-prompt direction debate", None, "200", "DebateResponse", true)
            },
            format!("{m}/edges/{{e}}/environment"): {
                "parameters": params(&["p", "m", "e"]),
                "post": op("Confounders and mediators at one level combination", Some(body("EnvironmentRequest")), "200", "EnvironmentResponse", true)
            },
            format!("{m}/variables/{{v}}/latent"): {
                "parameters": params(&["p", "m", "v"]),
                "post": op("Latent factors of a variable", None, "200", "LatentResponse", true)
            },
            format!("{m}/children"): {
                "parameters": params(&["p", "m"]),
                "post": op("Child models from a selection or a bidirectional split", Some(body("ChildrenRequest")), "201", "ChildrenResponse", false)
            },
            format!("{m}/sem"): {
                "parameters": params(&["p", "m"]),
                "post": op("Fit path coefficients and write them to the model", None, "200", "SemResponse", false)
            },
            "/jobs/{id}": {
                "parameters": params(&["id"]),
                "get": op("Background battery state", None, "200", "JobState", false)
            }
        },
        "components": {
            "schemas": schemas,
            "securitySchemes": { "token": { "type": "http", "scheme": "bearer" } }
        }
    })
}
