use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{
    segment_subtrees, structure_symbols, Alphabet, Bounds, CorpusError, GuiScreen, SegmentParams,
    Symbol,
};
use crate::sequence::{Termination, TokenId, TokenSequence};

pub const REPOSITORY_FORMAT_VERSION: u32 = 1;

/// One token of the vocabulary: a cropped GUI fragment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subtree {
    pub id: TokenId,
    pub app_id: String,
    pub screen_id: String,
    pub bounds: Bounds,
    pub width_px: u32,
    pub height_px: u32,
    pub structure: Vec<Symbol>,
    pub structure_string: String,
    #[serde(default)]
    pub clamped: bool,
    #[serde(skip)]
    pub crop: RgbImage,
}

impl Subtree {
    /// Height after scaling to `render_width` with the aspect ratio kept.
    pub fn rendered_height(&self, render_width: u32) -> u32 {
        let h = self.height_px as f64 * render_width as f64 / self.width_px.max(1) as f64;
        (h.round() as u32).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenInfo {
    pub app_id: String,
    pub screen_id: String,
    pub width: u32,
    pub height: u32,
    pub scale: (f64, f64),
    /// Kept subtrees of this screen in depth-first order: its real sequence.
    pub tokens: Vec<TokenId>,
}

/// The frozen token vocabulary plus the real sequences it was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubtreeRepository {
    pub format_version: u32,
    pub subtrees: Vec<Subtree>,
    pub start_ids: BTreeSet<TokenId>,
    pub end_ids: BTreeSet<TokenId>,
    pub app_index: BTreeMap<String, Vec<TokenId>>,
    pub alphabet: Alphabet,
    pub screens: Vec<ScreenInfo>,
    pub segment_params: SegmentParams,
}

fn crop_segment(screen: &GuiScreen, b: &Bounds) -> RgbImage {
    let frame = screen.frame();
    let (iw, ih) = screen.screenshot.dimensions();
    let (sx, sy) = screen.scale;
    let px = |v: i64, origin: i64, s: f64, limit: u32| -> u32 {
        (((v - origin) as f64 * s).round().max(0.0) as u32).min(limit)
    };
    let x1 = px(b.x1, frame.x1, sx, iw.saturating_sub(1));
    let y1 = px(b.y1, frame.y1, sy, ih.saturating_sub(1));
    let x2 = px(b.x2, frame.x1, sx, iw).max(x1 + 1);
    let y2 = px(b.y2, frame.y1, sy, ih).max(y1 + 1);
    image::imageops::crop_imm(&screen.screenshot, x1, y1, x2 - x1, y2 - y1).to_image()
}

/// Segments every screen, assigns dense token ids and collects the real
/// sequences. Screens that lose every subtree are skipped with a warning.
pub fn build_repository(
    screens: &[GuiScreen],
    params: &SegmentParams,
) -> Result<(SubtreeRepository, Vec<TokenSequence>), CorpusError> {
    let mut repo = SubtreeRepository {
        format_version: REPOSITORY_FORMAT_VERSION,
        subtrees: Vec::new(),
        start_ids: BTreeSet::new(),
        end_ids: BTreeSet::new(),
        app_index: BTreeMap::new(),
        alphabet: Alphabet::new(),
        screens: Vec::new(),
        segment_params: *params,
    };
    for screen in screens {
        let segments = match segment_subtrees(screen, params) {
            Ok(s) => s,
            Err(CorpusError::EmptySegmentation { screen }) => {
                log::warn!("excluding {screen}: no subtree survived segmentation");
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut tokens = Vec::with_capacity(segments.len());
        for seg in segments {
            let id = repo.subtrees.len();
            let structure = structure_symbols(&seg.node, &mut repo.alphabet);
            repo.subtrees.push(Subtree {
                id,
                app_id: screen.app_id.clone(),
                screen_id: screen.screen_id.clone(),
                bounds: seg.bounds,
                width_px: seg.bounds.width() as u32,
                height_px: seg.bounds.height() as u32,
                structure,
                structure_string: String::new(),
                clamped: seg.clamped,
                crop: crop_segment(screen, &seg.bounds),
            });
            tokens.push(id);
        }
        repo.start_ids.insert(tokens[0]);
        repo.end_ids.insert(*tokens.last().expect("non-empty segmentation"));
        repo.app_index
            .entry(screen.app_id.clone())
            .or_default()
            .extend(&tokens);
        repo.screens.push(ScreenInfo {
            app_id: screen.app_id.clone(),
            screen_id: screen.screen_id.clone(),
            width: screen.width,
            height: screen.height,
            scale: screen.scale,
            tokens,
        });
    }
    if repo.screens.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    // Rendering waits until the alphabet is complete: overflow past the
    // printable range changes the format of every string.
    for s in &mut repo.subtrees {
        s.structure_string = repo.alphabet.render(&s.structure);
    }
    let sequences = repo.real_sequences();
    Ok((repo, sequences))
}

impl SubtreeRepository {
    pub fn len(&self) -> usize {
        self.subtrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subtrees.is_empty()
    }

    pub fn get(&self, id: TokenId) -> Option<&Subtree> {
        self.subtrees.get(id)
    }

    pub fn app_of(&self, id: TokenId) -> Option<&str> {
        self.get(id).map(|s| s.app_id.as_str())
    }

    pub fn real_sequences(&self) -> Vec<TokenSequence> {
        self.screens
            .iter()
            .map(|s| TokenSequence::new(s.tokens.clone(), Termination::EndToken))
            .collect()
    }

    /// Concatenated structure symbols of a token sequence.
    pub fn sequence_structure(&self, tokens: &[TokenId]) -> Vec<Symbol> {
        tokens
            .iter()
            .filter_map(|&t| self.get(t))
            .flat_map(|s| s.structure.iter().copied())
            .collect()
    }

    /// The most common screen size (first seen wins ties): the canvas that
    /// generated designs are rendered onto.
    pub fn canonical_screen_size(&self) -> (u32, u32) {
        let mut counts: Vec<((u32, u32), usize)> = Vec::new();
        for s in &self.screens {
            match counts.iter_mut().find(|(k, _)| *k == (s.width, s.height)) {
                Some((_, c)) => *c += 1,
                None => counts.push(((s.width, s.height), 1)),
            }
        }
        counts
            .iter()
            .fold(None::<((u32, u32), usize)>, |best, &(k, c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((k, c)),
            })
            .map(|(k, _)| k)
            .unwrap_or((1, 1))
    }

    pub fn apps(&self) -> impl Iterator<Item = &str> {
        self.app_index.keys().map(String::as_str)
    }

    /// Checks the cross-references a loaded repository must satisfy.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::InvalidRepository(m));
        if self.format_version != REPOSITORY_FORMAT_VERSION {
            return bad(format!("unsupported format_version {}", self.format_version));
        }
        for (i, s) in self.subtrees.iter().enumerate() {
            if s.id != i {
                return bad(format!("subtree at index {i} has id {}", s.id));
            }
            if s.structure.is_empty() {
                return bad(format!("subtree {i} has an empty structure"));
            }
            if s.structure.iter().any(|&sym| sym as usize >= self.alphabet.len()) {
                return bad(format!("subtree {i} uses a symbol outside the alphabet"));
            }
        }
        let n = self.subtrees.len();
        let ids = self
            .start_ids
            .iter()
            .chain(&self.end_ids)
            .chain(self.app_index.values().flatten())
            .chain(self.screens.iter().flat_map(|s| &s.tokens));
        for &id in ids {
            if id >= n {
                return bad(format!("token id {id} referenced but only {n} subtrees exist"));
            }
        }
        Ok(())
    }

    /// Writes `repo.json` and `crops/<id>.png` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        let crops = dir.join("crops");
        fs::create_dir_all(&crops)?;
        fs::write(dir.join("repo.json"), serde_json::to_vec_pretty(self)?)?;
        for s in &self.subtrees {
            s.crop.save(crops.join(format!("{}.png", s.id)))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let mut repo: SubtreeRepository = serde_json::from_slice(&fs::read(dir.join("repo.json"))?)?;
        repo.validate()?;
        for s in &mut repo.subtrees {
            let path = dir.join("crops").join(format!("{}.png", s.id));
            s.crop = image::open(&path)
                .map_err(|e| CorpusError::ImageMismatch {
                    screen: format!("{}/{} (token {})", s.app_id, s.screen_id, s.id),
                    reason: format!("{}: {e}", path.display()),
                })?
                .to_rgb8();
        }
        Ok(repo)
    }
}
