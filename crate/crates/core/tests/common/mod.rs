#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mqsym::dsl::{self, ast::program_tree, Span};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn scripts(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "mq"))
        .collect();
    out.sort();
    out
}

pub fn valid_scripts() -> Vec<PathBuf> {
    scripts(&corpus_dir().join("valid"))
}

pub fn malformed_scripts() -> Vec<PathBuf> {
    scripts(&corpus_dir().join("malformed"))
}

/// Checks one valid script against its `.tree` file and the render round trip.
pub fn check_valid(path: &Path) -> Result<(), String> {
    let source = std::fs::read_to_string(path).unwrap();
    let expected = std::fs::read_to_string(path.with_extension("tree"))
        .map_err(|e| format!("{}: missing tree: {e}", path.display()))?;
    let stmts = dsl::parse(&source).map_err(|e| format!("{}: {e} at {}", path.display(), e.span))?;
    let tree = program_tree(&stmts);
    if tree != expected {
        return Err(format!("{}: tree mismatch\n got: {tree}\nwant: {expected}", path.display()));
    }
    let rendered = dsl::render_program(&stmts);
    let again = dsl::parse(&rendered).map_err(|e| format!("{}: rendered text fails to parse: {e}", path.display()))?;
    if program_tree(&again) != tree {
        return Err(format!("{}: round trip changed the tree:\n{rendered}", path.display()));
    }
    Ok(())
}

/// Reads the `# expect L:C+N` header of a malformed script.
pub fn expected_span(source: &str) -> (u32, u32, u32) {
    let header = source.lines().next().unwrap();
    let spec = header.strip_prefix("# expect ").expect("malformed scripts start with an expect header");
    let (pos, len) = spec.split_once('+').unwrap();
    let (line, col) = pos.split_once(':').unwrap();
    (line.parse().unwrap(), col.parse().unwrap(), len.parse().unwrap())
}

pub fn check_malformed(path: &Path) -> Result<(), String> {
    let source = std::fs::read_to_string(path).unwrap();
    let want = expected_span(&source);
    match dsl::parse(&source) {
        Ok(_) => Err(format!("{}: parsed without error", path.display())),
        Err(e) if !e.is_syntax() => Err(format!("{}: not a syntax error: {e}", path.display())),
        Err(e) => {
            let Span { line, column, length, .. } = e.span;
            if (line, column, length) == want {
                Ok(())
            } else {
                Err(format!("{}: span {line}:{column}+{length}, want {want:?} ({e})", path.display()))
            }
        }
    }
}
