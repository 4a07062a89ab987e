//! A minimal JSON-Schema checker covering exactly the keywords the shipped
//! report schema uses: `type`, `const`, `enum`, `properties`, `required`,
//! `additionalProperties`, `items`, `anyOf`, and local `$ref`. Good enough
//! to keep reports and schema honest without pulling in a full validator.

use std::path::Path;

use serde_json::Value;

pub fn load_schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    serde_json::from_str(&text).expect("schema document is valid JSON")
}

/// Validate `value` against `schema`, pushing one message per violation.
fn check(root: &Value, schema: &Value, value: &Value, at: &str, errors: &mut Vec<String>) {
    let Some(schema) = schema.as_object() else {
        panic!("schema node at {at} is not an object");
    };

    if let Some(reference) = schema.get("$ref").and_then(Value::as_str) {
        let target = reference
            .strip_prefix("#/")
            .expect("only local refs are supported")
            .split('/')
            .fold(root, |node, step| &node[step]);
        check(root, target, value, at, errors);
        return;
    }

    if let Some(expected) = schema.get("const") {
        if value != expected {
            errors.push(format!("{at}: expected const {expected}, got {value}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            errors.push(format!("{at}: {value} not in enum"));
        }
    }
    if let Some(variants) = schema.get("anyOf").and_then(Value::as_array) {
        let ok = variants.iter().any(|variant| {
            let mut scratch = Vec::new();
            check(root, variant, value, at, &mut scratch);
            scratch.is_empty()
        });
        if !ok {
            errors.push(format!("{at}: {value} matches no anyOf variant"));
        }
    }

    if let Some(ty) = schema.get("type").and_then(Value::as_str) {
        let matches = match ty {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "integer" => value.as_i64().is_some() || value.as_u64().is_some(),
            "boolean" => value.is_boolean(),
            other => panic!("unsupported type keyword {other}"),
        };
        if !matches {
            errors.push(format!("{at}: expected {ty}, got {value}"));
            return;
        }
    }

    if let Some(object) = value.as_object() {
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if !object.contains_key(key) {
                    errors.push(format!("{at}: missing required key `{key}`"));
                }
            }
        }
        let properties = schema.get("properties").and_then(Value::as_object);
        for (key, item) in object {
            let here = format!("{at}/{key}");
            if let Some(sub) = properties.and_then(|p| p.get(key)) {
                check(root, sub, item, &here, errors);
            } else {
                match schema.get("additionalProperties") {
                    Some(Value::Bool(false)) => {
                        errors.push(format!("{at}: unexpected key `{key}`"));
                    }
                    Some(sub @ Value::Object(_)) => check(root, sub, item, &here, errors),
                    _ => {}
                }
            }
        }
    }

    if let (Some(items), Some(array)) = (schema.get("items"), value.as_array()) {
        for (i, item) in array.iter().enumerate() {
            check(root, items, item, &format!("{at}[{i}]"), errors);
        }
    }
}

/// Panic with every violation if `text` is not a schema-valid report.
pub fn assert_valid_report(text: &str) -> Value {
    let value: Value = serde_json::from_str(text).expect("report output is valid JSON");
    let schema = load_schema();
    let mut errors = Vec::new();
    check(&schema, &schema, &value, "report", &mut errors);
    assert!(errors.is_empty(), "schema violations:\n{}", errors.join("\n"));
    value
}
