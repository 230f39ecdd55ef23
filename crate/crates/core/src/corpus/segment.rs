use serde::{Deserialize, Serialize};

use super::{Bounds, ComponentNode, CorpusError, GuiScreen};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    /// Children wider than this fraction of the screen are split further.
    pub width_frac: f64,
    pub aspect_min: f64,
    pub aspect_max: f64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            width_frac: 0.90,
            aspect_min: 0.25,
            aspect_max: 50.0,
        }
    }
}

/// A kept subtree before it is given a token id.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub node: ComponentNode,
    /// Bounds clamped into the screen frame.
    pub bounds: Bounds,
    pub clamped: bool,
}

fn collect<'a>(node: &'a ComponentNode, limit: f64, out: &mut Vec<&'a ComponentNode>) {
    for child in &node.children {
        // A too-wide leaf has nothing to split into and is kept as is.
        if child.bounds.width() as f64 > limit && !child.children.is_empty() {
            collect(child, limit, out);
        } else {
            out.push(child);
        }
    }
}

/// Cuts a screen into its smallest-granularity subtrees, in depth-first
/// order. The root itself is never emitted.
///
/// Filters, in order: duplicate bounds (first kept), partial overlap with an
/// already kept subtree, then zero area and aspect ratio outside
/// `[aspect_min, aspect_max]`.
pub fn segment_subtrees(screen: &GuiScreen, params: &SegmentParams) -> Result<Vec<Segment>, CorpusError> {
    let limit = params.width_frac * screen.width as f64;
    let mut candidates = Vec::new();
    collect(&screen.root, limit, &mut candidates);

    let frame = screen.frame();
    let mut kept: Vec<Segment> = Vec::new();
    for node in candidates {
        let (bounds, clamped) = node.bounds.clamp_to(&frame);
        if kept.iter().any(|k| k.bounds == bounds) {
            continue;
        }
        if kept.iter().any(|k| k.bounds.partially_overlaps(&bounds)) {
            continue;
        }
        kept.push(Segment {
            node: node.clone(),
            bounds,
            clamped,
        });
    }

    kept.retain(|s| {
        let (w, h) = (s.bounds.width(), s.bounds.height());
        if w <= 0 || h <= 0 {
            return false;
        }
        let aspect = w as f64 / h as f64;
        (params.aspect_min..=params.aspect_max).contains(&aspect)
    });

    if kept.is_empty() {
        return Err(CorpusError::EmptySegmentation { screen: screen.key() });
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::RgbImage;

    fn screen(w: i64, h: i64, children: Vec<ComponentNode>) -> GuiScreen {
        GuiScreen {
            app_id: "a".into(),
            screen_id: "s".into(),
            width: w as u32,
            height: h as u32,
            root: ComponentNode::with_children("Root", Bounds::new(0, 0, w, h), children),
            screenshot: RgbImage::new(w as u32, h as u32),
            scale: (1.0, 1.0),
        }
    }

    fn leaf(x1: i64, y1: i64, x2: i64, y2: i64) -> ComponentNode {
        ComponentNode::leaf("V", Bounds::new(x1, y1, x2, y2))
    }

    #[test]
    fn wide_children_recurse_narrow_ones_emit() {
        let wide = ComponentNode::with_children(
            "Wrap",
            Bounds::new(0, 0, 950, 400),
            vec![leaf(0, 0, 400, 200), leaf(500, 0, 900, 200)],
        );
        let segs = segment_subtrees(&screen(1000, 2000, vec![wide]), &SegmentParams::default()).unwrap();
        let got: Vec<_> = segs.iter().map(|s| s.bounds).collect();
        assert_eq!(got, [Bounds::new(0, 0, 400, 200), Bounds::new(500, 0, 900, 200)]);
    }

    #[test]
    fn too_wide_leaf_is_emitted() {
        let segs = segment_subtrees(&screen(1000, 2000, vec![leaf(0, 0, 1000, 100)]), &SegmentParams::default())
            .unwrap();
        assert_eq!(segs.len(), 1);
    }

    #[test]
    fn duplicate_bounds_keep_one() {
        let s = screen(1000, 2000, vec![leaf(10, 10, 200, 100), leaf(10, 10, 200, 100)]);
        let segs = segment_subtrees(&s, &SegmentParams::default()).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].bounds, Bounds::new(10, 10, 200, 100));
    }

    #[test]
    fn partial_overlap_drops_the_later_one() {
        let s = screen(1000, 2000, vec![leaf(0, 0, 400, 200), leaf(300, 100, 700, 300), leaf(0, 300, 400, 500)]);
        let segs = segment_subtrees(&s, &SegmentParams::default()).unwrap();
        let got: Vec<_> = segs.iter().map(|s| s.bounds).collect();
        assert_eq!(got, [Bounds::new(0, 0, 400, 200), Bounds::new(0, 300, 400, 500)]);
    }

    #[test]
    fn extreme_aspect_and_zero_area_are_filtered() {
        let s = screen(
            1000,
            2000,
            vec![leaf(0, 0, 500, 5), leaf(0, 10, 0, 50), leaf(0, 100, 100, 200)],
        );
        let segs = segment_subtrees(&s, &SegmentParams::default()).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].bounds, Bounds::new(0, 100, 100, 200));
    }

    #[test]
    fn out_of_frame_bounds_are_clamped_and_flagged() {
        let s = screen(100, 200, vec![leaf(50, 150, 80, 260)]);
        let segs = segment_subtrees(&s, &SegmentParams::default()).unwrap();
        assert_eq!(segs[0].bounds, Bounds::new(50, 150, 80, 200));
        assert!(segs[0].clamped);
    }

    #[test]
    fn nothing_left_is_an_error() {
        let s = screen(1000, 2000, vec![leaf(0, 0, 500, 5)]);
        assert!(matches!(
            segment_subtrees(&s, &SegmentParams::default()),
            Err(CorpusError::EmptySegmentation { .. })
        ));
    }

    #[test]
    fn segmentation_is_deterministic() {
        let s = screen(1000, 2000, vec![leaf(0, 0, 400, 200), leaf(0, 200, 400, 400)]);
        let p = SegmentParams::default();
        assert_eq!(segment_subtrees(&s, &p).unwrap(), segment_subtrees(&s, &p).unwrap());
    }
}
