use serde_json::{json, Map, Value};

use crate::{CliResult, Ctx, Failure};

/// One run's report: an ordered set of fields printed as text or one JSON line.
pub struct Report<'a> {
    ctx: &'a Ctx,
    fields: Map<String, Value>,
    violated: bool,
}

impl<'a> Report<'a> {
    pub fn new(command: &str, ctx: &'a Ctx) -> Self {
        let mut fields = Map::new();
        fields.insert("command".into(), json!(command));
        fields.insert("args".into(), json!(ctx.echo));
        Report { ctx, fields, violated: false }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.fields.insert(key.into(), value.into());
    }

    /// Records a counter against its theoretical bound.
    pub fn bound(&mut self, counter: &str, value: u128, formula: &str, bound: u128) {
        let ok = value <= bound;
        self.violated |= !ok;
        self.set(
            "bound_check",
            json!({
                "counter": counter,
                "value": value.to_string(),
                "formula": formula,
                "bound": bound.to_string(),
                "ok": ok,
            }),
        );
    }

    /// Prints the report. A violated bound turns into a failure.
    pub fn emit(mut self) -> CliResult<()> {
        if self.ctx.timings {
            let ms = self.ctx.started.elapsed().as_secs_f64() * 1000.0;
            self.fields.insert("elapsed_ms".into(), json!((ms * 1000.0).round() / 1000.0));
        }
        if self.ctx.json {
            println!("{}", Value::Object(self.fields));
        } else {
            for (k, v) in &self.fields {
                match v {
                    Value::String(s) => println!("{k}: {s}"),
                    Value::Array(items) if items.iter().all(Value::is_string) => {
                        let parts: Vec<&str> = items.iter().filter_map(Value::as_str).collect();
                        println!("{k}: {}", parts.join(" "));
                    }
                    other => println!("{k}: {other}"),
                }
            }
        }
        if self.violated {
            return Err(Failure::module("counter exceeded its theoretical bound"));
        }
        Ok(())
    }
}
