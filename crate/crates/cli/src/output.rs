use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

/// Keyword of the PNG text chunk holding the run configuration.
pub const PNG_CONFIG_KEY: &str = "merolab-config";

pub fn write_png(path: &Path, width: usize, height: usize, rgb: &[u8], config: &str) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.add_text_chunk(PNG_CONFIG_KEY.to_string(), config.to_string())?;
    let mut writer = enc.write_header()?;
    writer.write_image_data(rgb)?;
    writer.finish()?;
    Ok(())
}

/// Writes `bytes` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// CSV body preceded by a `# {config}` line.
pub fn csv_with_config(config: &str, body: &str) -> Vec<u8> {
    format!("# {config}\n{body}").into_bytes()
}

#[derive(Serialize)]
struct WithConfig<'a, T: Serialize> {
    #[serde(flatten)]
    body: &'a T,
    config: serde_json::Value,
}

/// Pretty JSON of `body` with the run configuration under `"config"`.
pub fn json_with_config<T: Serialize>(body: &T, config: &str) -> Vec<u8> {
    let v = WithConfig {
        body,
        config: serde_json::from_str(config).expect("config is JSON"),
    };
    let mut s = serde_json::to_vec_pretty(&v).expect("output serializes");
    s.push(b'\n');
    s
}
