//! Synthetic inputs shared by the benchmarks.

use std::fmt::Write;

/// A canonical scenario of `layers` layers with `width` scenes each. Every
/// scene runs a quiz and branches on the score to two scenes of the next
/// layer; the last layer leads to a single debrief scene.
pub fn layered_scenario(layers: u32, width: u32) -> Vec<u8> {
    let mut scenes = String::new();
    let num = |layer: u32, col: u32| 2 + layer * width + col;
    let end = num(layers, 0);
    let _ = writeln!(
        scenes,
        r#"      <scene num="1" prec="0" chemin="s/1.swf" description="Start"><t to="{}"/></scene>"#,
        num(0, 0)
    );
    for layer in 0..layers {
        for col in 0..width {
            let n = num(layer, col);
            let prec = if layer == 0 { 1 } else { num(layer - 1, col) };
            let (hi, lo) = if layer + 1 == layers {
                (end, end)
            } else {
                (num(layer + 1, col), num(layer + 1, (col + 1) % width))
            };
            let _ = writeln!(
                scenes,
                r#"      <scene num="{n}" prec="{prec}" chemin="s/{n}.swf" description="Scene {n}" activity="quiz"><t cond="&amp;score&gt;10" to="{hi}"/><t to="{lo}"/></scene>"#
            );
        }
    }
    let _ = writeln!(
        scenes,
        r#"      <scene num="{end}" prec="{}" chemin="s/end.swf" description="Debrief"/>"#,
        num(layers - 1, 0)
    );
    format!(
        r#"<?xml version="1.0" encoding="UTF-8"?>
<scenario id="layered" title="Layered">
  <objectives principal="skill">
    <objective id="skill" name="Skill" threshold="{}"/>
  </objectives>
  <variables>
    <variable name="score" initial="0" lo="0" hi="20" tracks="skill"/>
  </variables>
  <learner-profile>
    <score objective="skill" mechanism="sum"/>
  </learner-profile>
  <activities>
    <activity id="quiz" grain="activity" duration="60">
      <objective-effect objective="skill" min="0" max="20"/>
    </activity>
  </activities>
  <acts>
    <act id="main" objective="skill">
{scenes}    </act>
  </acts>
</scenario>
"#,
        layers * 5
    )
    .into_bytes()
}
