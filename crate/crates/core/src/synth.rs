//! Deterministic synthetic corpus: "apps" with their own color palettes and
//! block grammars, drawn as vertical stacks of blocks with matching
//! hierarchy metadata. The generator keeps its own block list for every
//! screen, which is what segmentation must recover.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{build_repository, parse_screen, Bounds, ComponentNode, CorpusError, GuiScreen, SegmentParams, SubtreeRepository};
use crate::TokenSequence;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic corpus spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Header,
    ListRow,
    ImageCard,
    Footer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRule {
    pub kind: BlockKind,
    /// Relative frequency among body blocks (ignored for header/footer).
    pub weight: u32,
    pub height: (u32, u32),
}

/// Per-app block grammar: a header, body blocks drawn by weight until the
/// screen is full, and a footer pinned to the bottom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grammar {
    pub rules: Vec<BlockRule>,
}

impl Grammar {
    fn rule(&self, kind: BlockKind) -> Option<&BlockRule> {
        self.rules.iter().find(|r| r.kind == kind)
    }

    fn body(&self) -> impl Iterator<Item = &BlockRule> {
        self.rules
            .iter()
            .filter(|r| !matches!(r.kind, BlockKind::Header | BlockKind::Footer) && r.weight > 0)
    }

    /// List-heavy for even app indices, card-heavy for odd ones.
    pub fn default_for(app: usize) -> Self {
        let (rows, cards) = if app.is_multiple_of(2) { (4, 1) } else { (1, 4) };
        Grammar {
            rules: vec![
                BlockRule { kind: BlockKind::Header, weight: 0, height: (28, 36) },
                BlockRule { kind: BlockKind::ListRow, weight: rows, height: (30, 44) },
                BlockRule { kind: BlockKind::ImageCard, weight: cards, height: (64, 96) },
                BlockRule { kind: BlockKind::Footer, weight: 0, height: (24, 30) },
            ],
        }
    }
}

const BASE_COLORS: [[u8; 3]; 8] = [
    [200, 40, 40],
    [40, 60, 200],
    [40, 170, 60],
    [220, 180, 40],
    [150, 50, 180],
    [30, 170, 190],
    [120, 80, 40],
    [230, 100, 180],
];

/// Base color plus a lighter and a darker shade.
pub fn palette_from_base(base: [u8; 3]) -> Vec<[u8; 3]> {
    let lighter = base.map(|c| c + (255 - c) / 2);
    let darker = base.map(|c| (c as f32 * 0.6) as u8);
    vec![base, lighter, darker]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_apps: usize,
    pub screens_per_app: usize,
    pub screen_size: (u32, u32),
    pub palettes: Vec<Vec<[u8; 3]>>,
    pub grammars: Vec<Grammar>,
    /// Apps whose blocks sit inside a 95%-wide wrapper, one level deeper.
    pub wrapped_apps: Vec<usize>,
}

impl SynthSpec {
    /// Default palettes and grammars; app 1 (when present) gets the wrapper.
    pub fn new(seed: u64, n_apps: usize, screens_per_app: usize) -> Self {
        Self {
            seed,
            n_apps,
            screens_per_app,
            screen_size: (144, 256),
            palettes: (0..n_apps)
                .map(|a| palette_from_base(BASE_COLORS[a % BASE_COLORS.len()]))
                .collect(),
            grammars: (0..n_apps).map(Grammar::default_for).collect(),
            wrapped_apps: if n_apps > 1 { vec![1] } else { vec![] },
        }
    }

    pub fn app_id(app: usize) -> String {
        format!("app{app:02}")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.n_apps < 2 {
            return bad(format!("need at least 2 apps, got {}", self.n_apps));
        }
        if self.screens_per_app < 2 {
            return bad(format!("need at least 2 screens per app, got {}", self.screens_per_app));
        }
        let (w, h) = self.screen_size;
        if w < 32 || h < 64 {
            return bad(format!("screen {w}×{h} is too small"));
        }
        if self.palettes.len() != self.n_apps || self.grammars.len() != self.n_apps {
            return bad("one palette and one grammar per app required".into());
        }
        if self.palettes.iter().any(|p| p.len() < 3) {
            return bad("palettes need at least 3 colors".into());
        }
        let means: Vec<[f64; 3]> = self.palettes.iter().map(|p| palette_mean(p)).collect();
        for a in 0..self.n_apps {
            for b in a + 1..self.n_apps {
                let sep = (0..3)
                    .map(|c| (means[a][c] - means[b][c]).abs())
                    .fold(0.0, f64::max);
                if sep < 64.0 {
                    return bad(format!(
                        "palettes of apps {a} and {b} differ by only {sep:.1} in mean RGB"
                    ));
                }
            }
        }
        for (a, g) in self.grammars.iter().enumerate() {
            for kind in [BlockKind::Header, BlockKind::Footer] {
                if g.rule(kind).is_none() {
                    return bad(format!("grammar of app {a} lacks a {kind:?} rule"));
                }
            }
            if g.body().next().is_none() {
                return bad(format!("grammar of app {a} has no body blocks"));
            }
            if g.rules.iter().any(|r| r.height.0 == 0 || r.height.0 > r.height.1) {
                return bad(format!("grammar of app {a} has an empty height range"));
            }
        }
        Ok(())
    }
}

pub fn palette_mean(p: &[[u8; 3]]) -> [f64; 3] {
    let mut m = [0.0; 3];
    for c in p {
        for k in 0..3 {
            m[k] += c[k] as f64 / p.len() as f64;
        }
    }
    m
}

/// One generated screen with the generator's own record of its blocks.
#[derive(Clone, Debug)]
pub struct SynthScreen {
    pub screen: GuiScreen,
    pub app: usize,
    pub blocks: Vec<(BlockKind, Bounds)>,
}

const BACKGROUND: [u8; 3] = [245, 245, 245];
const GAP: u32 = 4;

fn fill(img: &mut RgbImage, b: &Bounds, color: [u8; 3]) {
    for y in b.y1.max(0)..b.y2.min(img.height() as i64) {
        for x in b.x1.max(0)..b.x2.min(img.width() as i64) {
            img.put_pixel(x as u32, y as u32, Rgb(color));
        }
    }
}

fn jitter(rng: &mut ChaCha8Rng, c: [u8; 3]) -> [u8; 3] {
    let d: i16 = rng.gen_range(-8..=8);
    c.map(|v| (v as i16 + d).clamp(0, 255) as u8)
}

/// Inner widgets of a block; bounds are relative to the block's top-left.
fn widgets(kind: BlockKind, app: usize, w: i64, h: i64) -> Vec<(&'static str, Bounds, usize)> {
    let pad = 4;
    let icon = (h - 2 * pad).max(1);
    match kind {
        BlockKind::Header if app.is_multiple_of(2) => vec![
            ("ImageView", Bounds::new(pad, pad, pad + icon, pad + icon), 2),
            ("TextView", Bounds::new(2 * pad + icon, h / 3, w - pad, 2 * h / 3), 0),
        ],
        BlockKind::Header => vec![
            ("ImageButton", Bounds::new(pad, pad, pad + icon, pad + icon), 2),
            ("TextView", Bounds::new(2 * pad + icon, h / 3, w - 2 * pad - icon, 2 * h / 3), 0),
            ("ImageView", Bounds::new(w - pad - icon, pad, w - pad, pad + icon), 2),
        ],
        BlockKind::ListRow => vec![
            ("ImageView", Bounds::new(pad, pad, pad + icon, pad + icon), 2),
            ("LinearLayout", Bounds::new(2 * pad + icon, pad, w - pad, h - pad), 1),
        ],
        BlockKind::ImageCard => vec![
            ("ImageView", Bounds::new(pad, pad, w - pad, h * 3 / 4), 2),
            ("TextView", Bounds::new(pad, h * 3 / 4 + 2, w / 2, h - pad), 0),
        ],
        BlockKind::Footer => {
            let bw = (w - 4 * pad) / 3;
            (0..3)
                .map(|i| {
                    let x = pad + i * (bw + pad);
                    ("ImageButton", Bounds::new(x, pad, x + bw, h - pad), 2)
                })
                .collect()
        }
    }
}

fn block_label(kind: BlockKind) -> &'static str {
    match kind {
        BlockKind::Header => "Toolbar",
        BlockKind::ListRow => "RelativeLayout",
        BlockKind::ImageCard => "CardView",
        BlockKind::Footer => "BottomNavigationView",
    }
}

fn offset(b: Bounds, dx: i64, dy: i64) -> Bounds {
    Bounds::new(b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy)
}

fn draw_block(
    img: &mut RgbImage,
    rng: &mut ChaCha8Rng,
    kind: BlockKind,
    app: usize,
    palette: &[[u8; 3]],
    b: Bounds,
) -> ComponentNode {
    fill(img, &b, jitter(rng, palette[1]));
    let mut children = Vec::new();
    for (label, rel, shade) in widgets(kind, app, b.width(), b.height()) {
        let abs = offset(rel, b.x1, b.y1);
        fill(img, &abs, jitter(rng, palette[shade]));
        let node = if label == "LinearLayout" {
            // Two text lines inside a list row.
            let mid = (abs.y1 + abs.y2) / 2;
            let lines = vec![
                ComponentNode::leaf("TextView", Bounds::new(abs.x1, abs.y1, abs.x2, mid - 1)),
                ComponentNode::leaf("TextView", Bounds::new(abs.x1, mid + 1, abs.x2 - abs.width() / 3, abs.y2)),
            ];
            for l in &lines {
                fill(img, &l.bounds, jitter(rng, palette[0]));
            }
            ComponentNode::with_children(label, abs, lines)
        } else {
            ComponentNode::leaf(label, abs)
        };
        children.push(node);
    }
    ComponentNode::with_children(block_label(kind), b, children)
}

fn generate_screen(
    spec: &SynthSpec,
    app: usize,
    index: usize,
    rng: &mut ChaCha8Rng,
) -> SynthScreen {
    let (w, h) = spec.screen_size;
    let (wi, hi) = (w as i64, h as i64);
    let grammar = &spec.grammars[app];
    let palette = &spec.palettes[app];
    let mut img = RgbImage::from_pixel(w, h, Rgb(BACKGROUND));

    let margin = (wi as f64 * 0.06).ceil() as i64;
    let (x1, x2) = (margin, wi - margin);

    let header = grammar.rule(BlockKind::Header).expect("validated");
    let footer = grammar.rule(BlockKind::Footer).expect("validated");
    let header_h = rng.gen_range(header.height.0..=header.height.1) as i64;
    let footer_h = rng.gen_range(footer.height.0..=footer.height.1) as i64;
    let footer_y = hi - footer_h;

    let mut plan = vec![(BlockKind::Header, Bounds::new(x1, 0, x2, header_h))];
    let mut y = header_h + GAP as i64;
    let body: Vec<&BlockRule> = grammar.body().collect();
    let total: u32 = body.iter().map(|r| r.weight).sum();
    loop {
        let mut pick = rng.gen_range(0..total);
        let rule = body
            .iter()
            .find(|r| {
                if pick < r.weight {
                    true
                } else {
                    pick -= r.weight;
                    false
                }
            })
            .expect("weights sum to total");
        let bh = rng.gen_range(rule.height.0..=rule.height.1) as i64;
        if y + bh + GAP as i64 > footer_y {
            break;
        }
        plan.push((rule.kind, Bounds::new(x1, y, x2, y + bh)));
        y += bh + GAP as i64;
    }
    plan.push((BlockKind::Footer, Bounds::new(x1, footer_y, x2, hi)));

    let blocks: Vec<ComponentNode> = plan
        .iter()
        .map(|&(kind, b)| draw_block(&mut img, rng, kind, app, palette, b))
        .collect();
    let full = Bounds::new(0, 0, wi, hi);
    let body_node = if spec.wrapped_apps.contains(&app) {
        let inset = (wi as f64 * 0.025).round() as i64;
        vec![ComponentNode::with_children(
            "FrameLayout",
            Bounds::new(inset, 0, wi - inset, hi),
            blocks,
        )]
    } else {
        blocks
    };
    let content = ComponentNode::with_children("LinearLayout", full, body_node);
    let root = ComponentNode::with_children("FrameLayout", full, vec![content]);
    let screen = parse_screen(
        &root.to_json(),
        img,
        &SynthSpec::app_id(app),
        &format!("screen{index:03}"),
    )
    .expect("generated metadata is well formed");
    SynthScreen {
        screen,
        app,
        blocks: plan,
    }
}

/// Generates `n_apps × screens_per_app` screens, app-major.
pub fn generate_corpus(spec: &SynthSpec) -> Result<Vec<SynthScreen>, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n_apps * spec.screens_per_app);
    for app in 0..spec.n_apps {
        for index in 0..spec.screens_per_app {
            out.push(generate_screen(spec, app, index, &mut rng));
        }
    }
    Ok(out)
}

/// Generates the corpus and runs it through segmentation and repository building.
pub fn synthetic_repository(spec: &SynthSpec) -> Result<(SubtreeRepository, Vec<TokenSequence>), SynthError> {
    let screens: Vec<GuiScreen> = generate_corpus(spec)?.into_iter().map(|s| s.screen).collect();
    Ok(build_repository(&screens, &SegmentParams::default())?)
}
