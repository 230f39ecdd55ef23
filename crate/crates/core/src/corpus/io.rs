//! On-disk corpus layout: `<root>/<app_id>/<screen_id>.json` next to
//! `<screen_id>.png`.

use std::fs;
use std::path::{Path, PathBuf};

use super::{parse_screen_bytes, CorpusError, GuiScreen};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScreenFiles {
    pub app_id: String,
    pub screen_id: String,
    pub metadata: PathBuf,
    pub screenshot: PathBuf,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut entries = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()?;
    entries.sort();
    Ok(entries)
}

impl ScreenFiles {
    /// Every `<app>/<screen>.json` under `root` that has a sibling PNG,
    /// in sorted order.
    pub fn discover(root: &Path) -> Result<Vec<ScreenFiles>, CorpusError> {
        let mut out = Vec::new();
        for app_dir in sorted_entries(root)? {
            if !app_dir.is_dir() {
                continue;
            }
            let app_id = app_dir
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            for path in sorted_entries(&app_dir)? {
                if path.extension().and_then(|e| e.to_str()) != Some("json") {
                    continue;
                }
                let screenshot = path.with_extension("png");
                let screen_id = path
                    .file_stem()
                    .and_then(|n| n.to_str())
                    .unwrap_or_default()
                    .to_string();
                if !screenshot.exists() {
                    log::warn!("{app_id}/{screen_id}: no screenshot next to metadata, skipped");
                    continue;
                }
                out.push(ScreenFiles {
                    app_id: app_id.clone(),
                    screen_id,
                    metadata: path,
                    screenshot,
                });
            }
        }
        Ok(out)
    }

    pub fn load(&self) -> Result<GuiScreen, CorpusError> {
        let meta = fs::read(&self.metadata)?;
        let png = fs::read(&self.screenshot)?;
        parse_screen_bytes(&meta, &png, &self.app_id, &self.screen_id)
    }
}

/// Loads every screen under `root`. Screens that fail to parse are returned
/// separately so the caller can report them; they do not abort the load.
pub fn load_input_dir(root: &Path) -> Result<(Vec<GuiScreen>, Vec<CorpusError>), CorpusError> {
    let mut screens = Vec::new();
    let mut failures = Vec::new();
    for files in ScreenFiles::discover(root)? {
        match files.load() {
            Ok(s) => screens.push(s),
            Err(e) => {
                log::warn!("skipping screen: {e}");
                failures.push(e);
            }
        }
    }
    Ok((screens, failures))
}

/// Writes a screen back out in the input layout.
pub fn write_screen(root: &Path, screen: &GuiScreen) -> Result<(), CorpusError> {
    let dir = root.join(&screen.app_id);
    fs::create_dir_all(&dir)?;
    fs::write(
        dir.join(format!("{}.json", screen.screen_id)),
        serde_json::to_vec_pretty(&screen.root.to_json())?,
    )?;
    screen
        .screenshot
        .save(dir.join(format!("{}.png", screen.screen_id)))?;
    Ok(())
}
