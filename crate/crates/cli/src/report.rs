use serde::Serialize;

#[derive(Serialize)]
pub struct Row {
    pub name: String,
    pub verdict: String,
    pub classes: Option<usize>,
    pub seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

#[derive(Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub results: Vec<Row>,
    pub totals: Totals,
}

#[derive(Serialize, Default)]
pub struct Totals {
    pub holds: usize,
    pub violated: usize,
    pub unknown: usize,
    pub errors: usize,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            schema: 1,
            command: command.to_string(),
            results: Vec::new(),
            totals: Totals::default(),
        }
    }

    pub fn row(
        &mut self,
        name: &str,
        verdict: &str,
        classes: Option<usize>,
        seconds: Option<f64>,
        note: Option<String>,
        counterexample: Option<String>,
    ) {
        match verdict {
            "holds" | "schedulable" => self.totals.holds += 1,
            "violated" | "not schedulable" => self.totals.violated += 1,
            "unknown" => self.totals.unknown += 1,
            _ => self.totals.errors += 1,
        }
        self.results.push(Row {
            name: name.to_string(),
            verdict: verdict.to_string(),
            classes,
            seconds,
            note,
            counterexample,
        });
    }

    pub fn exit_code(&self) -> u8 {
        if self.totals.errors + self.totals.unknown > 0 {
            2
        } else if self.totals.violated > 0 {
            1
        } else {
            0
        }
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            return format!("{}\n", serde_json::to_string_pretty(self).unwrap());
        }
        let width = self.results.iter().map(|r| r.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&format!(
                "{:width$}  {:<16}",
                r.name,
                r.verdict.to_uppercase()
            ));
            if let Some(c) = r.classes {
                out.push_str(&format!("  {c} classes"));
            }
            if let Some(s) = r.seconds {
                out.push_str(&format!("  {s:.3}s"));
            }
            out.push('\n');
            if let Some(n) = &r.note {
                out.push_str(&format!("    {n}\n"));
            }
            if let Some(cex) = &r.counterexample {
                for line in cex.lines() {
                    out.push_str(&format!("    {line}\n"));
                }
            }
        }
        let t = &self.totals;
        out.push_str(&format!(
            "-- {} holds, {} violated, {} unknown, {} errors\n",
            t.holds, t.violated, t.unknown, t.errors
        ));
        out
    }
}
