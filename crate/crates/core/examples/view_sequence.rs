use softedge::curation::{make_view_training_sequence, ViewSequenceParams};
use softedge::{DepthConvention, FlowField, ImageRgb, ScalarMap};

fn main() -> softedge::Result<()> {
    let (w, h, frames) = (64, 48, 4);
    let fg = ImageRgb::filled(w, h, [0.9, 0.3, 0.1])?;
    let alpha = ScalarMap::from_fn(w, h, DepthConvention::Unitless, |x, y| {
        let inside = (20..44).contains(&x) && (14..34).contains(&y);
        if inside { 1.0 } else { 0.0 }
    })?;
    let bg: Vec<ImageRgb> = (0..frames)
        .map(|k| ImageRgb::from_fn(w, h, |x, y| [0.1, 0.02 * ((x + k) % 16) as f64, 0.01 * y as f64]))
        .collect::<Result<_, _>>()?;
    let flows = vec![FlowField::uniform(w, h, 1.0, 0.0)?; frames];

    let seq = make_view_training_sequence(&fg, &alpha, &bg, &flows, &ViewSequenceParams::new(6.0, frames, 3))?;
    for (k, f) in seq.frames.iter().enumerate() {
        let holes = w * h - f.coverage.count();
        println!(
            "frame {k}: foreground moved ({:+.2}, {:+.2}), {holes} uncovered pixels",
            f.displacement.0, f.displacement.1
        );
    }
    Ok(())
}
