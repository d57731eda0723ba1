//! Regenerate the replay transcripts from the scripted responses in
//! `data/e2e/tasks.json` and in the instruction tasks of `data/suite`.
//!
//! ```text
//! cargo run -p ltlnav-cli --example record_fixtures
//! ```

use std::path::Path;

use ltlnav::codegen::{translate, ObjectTable, RecordingClient, ScriptedClient, TranslateOptions};
use ltlnav::semmap::io::MapDocument;

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("readable")).expect("valid json")
}

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let e2e = data.join("e2e");
    let tasks = read_json(&e2e.join("tasks.json"));
    for task in tasks.as_array().expect("task list") {
        record(&e2e, task["name"].as_str().expect("name"), task);
    }

    let suite = data.join("suite");
    let mut files: Vec<_> = std::fs::read_dir(&suite)
        .expect("suite dir")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    for f in files {
        let task = read_json(&f);
        if task.get("responses").is_some() {
            let name = f.file_stem().expect("stem").to_string_lossy().into_owned();
            record(&suite, &name, &task);
        }
    }
}

fn record(root: &Path, name: &str, task: &serde_json::Value) {
    let out = root.join("transcripts");
    std::fs::create_dir_all(&out).expect("transcript dir");
    let doc = MapDocument::load(root.join(task["map"].as_str().expect("map"))).expect("map loads");
    let table = ObjectTable::from_map(&doc).expect("object table");
    let responses: Vec<String> = task["responses"]
        .as_array()
        .expect("responses")
        .iter()
        .map(|r| r.as_str().expect("text").to_string())
        .collect();
    let rec = RecordingClient::new(ScriptedClient::new(responses));
    let result = translate(
        task["instruction"].as_str().expect("instruction"),
        &table,
        &rec,
        &TranslateOptions::default(),
    );
    match &result {
        Ok(r) => println!("{name}: {} ({} attempt(s))", r.formula.to_prefix(), r.attempts),
        Err(e) => println!("{name}: {e}"),
    }
    println!("  ids: {}", table.correspondence().replace('\n', " "));
    rec.save(&out.join(format!("{name}.json"))).expect("write transcript");
}
