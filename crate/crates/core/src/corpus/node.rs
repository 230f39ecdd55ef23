use image::RgbImage;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CorpusError;

/// Pixel rectangle `(x1, y1)`–`(x2, y2)`, serialized as `[x1, y1, x2, y2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i64; 4]", into = "[i64; 4]")]
pub struct Bounds {
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
}

impl From<[i64; 4]> for Bounds {
    fn from([x1, y1, x2, y2]: [i64; 4]) -> Self {
        Self { x1, y1, x2, y2 }
    }
}

impl From<Bounds> for [i64; 4] {
    fn from(b: Bounds) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

impl Bounds {
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> i64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> i64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> i64 {
        self.width().max(0) * self.height().max(0)
    }

    pub fn intersection_area(&self, other: &Bounds) -> i64 {
        let w = self.x2.min(other.x2) - self.x1.max(other.x1);
        let h = self.y2.min(other.y2) - self.y1.max(other.y1);
        w.max(0) * h.max(0)
    }

    pub fn contains(&self, other: &Bounds) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && self.x2 >= other.x2 && self.y2 >= other.y2
    }

    /// Positive-area intersection where neither rectangle contains the other.
    pub fn partially_overlaps(&self, other: &Bounds) -> bool {
        self.intersection_area(other) > 0 && !self.contains(other) && !other.contains(self)
    }

    /// Clamps into `frame`; the flag says whether anything moved.
    pub fn clamp_to(&self, frame: &Bounds) -> (Bounds, bool) {
        let c = Bounds {
            x1: self.x1.clamp(frame.x1, frame.x2),
            y1: self.y1.clamp(frame.y1, frame.y2),
            x2: self.x2.clamp(frame.x1, frame.x2),
            y2: self.y2.clamp(frame.y1, frame.y2),
        };
        (c, c != *self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentNode {
    pub component_label: String,
    pub bounds: Bounds,
    pub children: Vec<ComponentNode>,
}

impl ComponentNode {
    pub fn leaf(label: &str, bounds: Bounds) -> Self {
        Self {
            component_label: label.to_string(),
            bounds,
            children: Vec::new(),
        }
    }

    pub fn with_children(label: &str, bounds: Bounds, children: Vec<ComponentNode>) -> Self {
        Self {
            component_label: label.to_string(),
            bounds,
            children,
        }
    }

    /// Nodes in depth-first pre-order.
    pub fn preorder(&self) -> Vec<&ComponentNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(ComponentNode::node_count).sum::<usize>()
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "class": self.component_label,
            "bounds": <[i64; 4]>::from(self.bounds),
            "children": self.children.iter().map(ComponentNode::to_json).collect::<Vec<_>>(),
        })
    }
}

/// A parsed screen. The screen frame is the root node's bounds; when the
/// screenshot's pixel size differs from the frame, `scale` maps frame
/// coordinates onto screenshot pixels.
#[derive(Clone, Debug)]
pub struct GuiScreen {
    pub app_id: String,
    pub screen_id: String,
    pub width: u32,
    pub height: u32,
    pub root: ComponentNode,
    pub screenshot: RgbImage,
    pub scale: (f64, f64),
}

impl GuiScreen {
    pub fn frame(&self) -> Bounds {
        self.root.bounds
    }

    pub fn key(&self) -> String {
        format!("{}/{}", self.app_id, self.screen_id)
    }
}

fn parse_node(v: &Value, path: &str, screen: &str) -> Result<ComponentNode, CorpusError> {
    let bad = |reason: String| CorpusError::MalformedMetadata {
        screen: screen.to_string(),
        reason,
    };
    let obj = v
        .as_object()
        .ok_or_else(|| bad(format!("{path}: node is not an object")))?;
    let label = match obj.get("class") {
        None | Some(Value::Null) => "View".to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(bad(format!("{path}: \"class\" is not a string"))),
    };
    let raw = obj
        .get("bounds")
        .ok_or_else(|| bad(format!("{path}: missing \"bounds\"")))?
        .as_array()
        .ok_or_else(|| bad(format!("{path}: \"bounds\" is not an array")))?;
    if raw.len() != 4 {
        return Err(bad(format!("{path}: \"bounds\" needs 4 entries, got {}", raw.len())));
    }
    let mut xs = [0i64; 4];
    for (slot, value) in xs.iter_mut().zip(raw) {
        *slot = value
            .as_i64()
            .ok_or_else(|| bad(format!("{path}: non-integer coordinate {value}")))?;
    }
    let bounds = Bounds::from(xs);
    if bounds.x1 > bounds.x2 || bounds.y1 > bounds.y2 {
        return Err(bad(format!("{path}: inverted bounds {xs:?}")));
    }
    let children = match obj.get("children") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, c)| parse_node(c, &format!("{path}.children[{i}]"), screen))
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(bad(format!("{path}: \"children\" is not an array"))),
    };
    Ok(ComponentNode {
        component_label: label,
        bounds,
        children,
    })
}

/// Parses a hierarchy document (`{"class", "bounds", "children"}` nodes)
/// and pairs it with its screenshot.
pub fn parse_screen(
    metadata: &Value,
    screenshot: RgbImage,
    app_id: &str,
    screen_id: &str,
) -> Result<GuiScreen, CorpusError> {
    let key = format!("{app_id}/{screen_id}");
    let root = parse_node(metadata, "root", &key)?;
    let (w, h) = (root.bounds.width(), root.bounds.height());
    if w <= 0 || h <= 0 {
        return Err(CorpusError::MalformedMetadata {
            screen: key,
            reason: format!("root frame {w}×{h} has no area"),
        });
    }
    let (iw, ih) = screenshot.dimensions();
    if iw == 0 || ih == 0 {
        return Err(CorpusError::ImageMismatch {
            screen: key,
            reason: "empty screenshot".to_string(),
        });
    }
    let scale = (iw as f64 / w as f64, ih as f64 / h as f64);
    if scale != (1.0, 1.0) {
        log::debug!("{key}: screenshot {iw}×{ih} vs frame {w}×{h}, scale {scale:?}");
    }
    Ok(GuiScreen {
        app_id: app_id.to_string(),
        screen_id: screen_id.to_string(),
        width: w as u32,
        height: h as u32,
        root,
        screenshot,
        scale,
    })
}

/// Same as [`parse_screen`] from raw file contents.
pub fn parse_screen_bytes(
    metadata: &[u8],
    png: &[u8],
    app_id: &str,
    screen_id: &str,
) -> Result<GuiScreen, CorpusError> {
    let key = format!("{app_id}/{screen_id}");
    let doc: Value = serde_json::from_slice(metadata).map_err(|e| CorpusError::MalformedMetadata {
        screen: key.clone(),
        reason: e.to_string(),
    })?;
    let img = image::load_from_memory(png)
        .map_err(|e| CorpusError::ImageMismatch {
            screen: key,
            reason: e.to_string(),
        })?
        .to_rgb8();
    parse_screen(&doc, img, app_id, screen_id)
}
