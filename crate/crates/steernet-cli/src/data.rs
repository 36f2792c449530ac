//! Synthetic desk-scale datasets and their single-file binary container.
//!
//! `shapes-seg` draws bright ellipses and rectangles on a noisy dark
//! background with pixel-exact masks. `blobs-cls5` overlays up to five
//! oriented grating textures, labels each independently, and marks a small
//! fraction of labels as uncertain via the bitmask channel.

use crate::CliError;
use std::io::Write;
use std::path::Path;
use steernet::engine::{Batch, TaskKind};
use steernet::numerics::{RngStream, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    ShapesSeg,
    BlobsCls5,
}

impl DatasetKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "shapes-seg" => Some(DatasetKind::ShapesSeg),
            "blobs-cls5" => Some(DatasetKind::BlobsCls5),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DatasetKind::ShapesSeg => "shapes-seg",
            DatasetKind::BlobsCls5 => "blobs-cls5",
        }
    }

    pub fn task(&self) -> TaskKind {
        match self {
            DatasetKind::ShapesSeg => TaskKind::Segmentation,
            DatasetKind::BlobsCls5 => TaskKind::MultiLabel,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub images: Tensor,
    pub targets: Tensor,
    pub mask: Option<Tensor>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.shape().first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Split into consecutive batches; the last one may be short.
    pub fn batches(&self, batch_size: usize) -> Vec<Batch> {
        let n = self.len();
        let shape = self.images.shape();
        let img_stride: usize = shape[1..].iter().product();
        let tgt_stride: usize = self.targets.shape()[1..].iter().product();
        let mut out = Vec::new();
        let mut start = 0;
        while start < n {
            let take = batch_size.min(n - start);
            let mut img_shape = shape.to_vec();
            img_shape[0] = take;
            let mut tgt_shape = self.targets.shape().to_vec();
            tgt_shape[0] = take;
            let images = Tensor::from_vec(
                &img_shape,
                self.images.data()[start * img_stride..(start + take) * img_stride].to_vec(),
            );
            let targets = Tensor::from_vec(
                &tgt_shape,
                self.targets.data()[start * tgt_stride..(start + take) * tgt_stride].to_vec(),
            );
            let mask = self.mask.as_ref().map(|m| {
                let stride: usize = m.shape()[1..].iter().product();
                let mut ms = m.shape().to_vec();
                ms[0] = take;
                Tensor::from_vec(&ms, m.data()[start * stride..(start + take) * stride].to_vec())
            });
            out.push(Batch {
                inputs: images,
                targets,
                mask,
            });
            start += take;
        }
        out
    }

    /// Positive/negative label counts per task for the focal loss, honoring
    /// the uncertainty mask. Counts are clamped to at least one so the
    /// balance weights stay defined on tiny datasets.
    pub fn class_counts(&self) -> Vec<(f64, f64)> {
        match self.kind {
            DatasetKind::ShapesSeg => vec![],
            DatasetKind::BlobsCls5 => {
                let n = self.len();
                let mut counts = vec![(0.0f64, 0.0f64); 5];
                for ni in 0..n {
                    for t in 0..5 {
                        let masked = self
                            .mask
                            .as_ref()
                            .map(|m| m.at2(ni, t) == 0.0)
                            .unwrap_or(false);
                        if masked {
                            continue;
                        }
                        if self.targets.at2(ni, t) > 0.5 {
                            counts[t].0 += 1.0;
                        } else {
                            counts[t].1 += 1.0;
                        }
                    }
                }
                counts
                    .into_iter()
                    .map(|(p, ng)| (p.max(1.0), ng.max(1.0)))
                    .collect()
            }
        }
    }
}

fn fill_ellipse(
    img: &mut [f32],
    mask: &mut [f32],
    w: usize,
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    level: f32,
) {
    let h = img.len() / w;
    for y in 0..h {
        for x in 0..w {
            let dx = (x as f64 - cx) / rx;
            let dy = (y as f64 - cy) / ry;
            if dx * dx + dy * dy <= 1.0 {
                img[y * w + x] = level;
                mask[y * w + x] = 1.0;
            }
        }
    }
}

fn fill_rect(
    img: &mut [f32],
    mask: &mut [f32],
    w: usize,
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
    level: f32,
) {
    let h = img.len() / w;
    for y in y0..y1.min(h) {
        for x in x0..x1.min(w) {
            img[y * w + x] = level;
            mask[y * w + x] = 1.0;
        }
    }
}

/// Segmentation data: one to three bright shapes per image over a dark
/// noisy background.
pub fn gen_shapes_seg(count: usize, size: usize, seed: u64) -> Dataset {
    let mut rng = RngStream::new(seed).derive(0x5E6);
    let mut images = Tensor::zeros(&[count, 1, size, size]);
    let mut masks = Tensor::zeros(&[count, 1, size, size]);
    let plane = size * size;
    for ni in 0..count {
        let img = &mut images.data_mut()[ni * plane..(ni + 1) * plane];
        let base = rng.uniform(0.12, 0.3);
        for v in img.iter_mut() {
            *v = base;
        }
        let msk = &mut masks.data_mut()[ni * plane..(ni + 1) * plane];
        let shapes = 1 + rng.pick(3);
        for _ in 0..shapes {
            let level = rng.uniform(0.65, 0.95);
            if rng.pick(2) == 0 {
                let rx = rng.uniform_f64(size as f64 * 0.1, size as f64 * 0.25);
                let ry = rng.uniform_f64(size as f64 * 0.1, size as f64 * 0.25);
                let cx = rng.uniform_f64(rx, size as f64 - rx);
                let cy = rng.uniform_f64(ry, size as f64 - ry);
                fill_ellipse(img, msk, size, cx, cy, rx, ry, level);
            } else {
                let ww = 2 + rng.pick(size / 2);
                let hh = 2 + rng.pick(size / 2);
                let x0 = rng.pick(size - ww);
                let y0 = rng.pick(size - hh);
                fill_rect(img, msk, size, x0, y0, x0 + ww, y0 + hh, level);
            }
        }
        for v in img.iter_mut() {
            *v = (*v + rng.uniform(-0.08, 0.08)).clamp(0.0, 1.0);
        }
    }
    Dataset {
        kind: DatasetKind::ShapesSeg,
        images,
        targets: masks,
        mask: None,
    }
}

/// Multi-label data: five oriented grating textures, each present with
/// probability one half, plus a 10 percent uncertainty mask.
pub fn gen_blobs_cls5(count: usize, size: usize, seed: u64) -> Dataset {
    let mut rng = RngStream::new(seed).derive(0xB10B);
    let mut images = Tensor::zeros(&[count, 1, size, size]);
    let mut labels = Tensor::zeros(&[count, 5]);
    let mut mask = Tensor::zeros(&[count, 5]);
    let plane = size * size;
    // distinct (orientation, frequency) per class
    let textures: [(f64, f64, f64); 5] = [
        (0.0, 1.0, 0.9),
        (1.0, 0.0, 0.9),
        (0.7, 0.7, 0.9),
        (0.0, 1.0, 2.2),
        (0.7, -0.7, 2.2),
    ];
    for ni in 0..count {
        let img = &mut images.data_mut()[ni * plane..(ni + 1) * plane];
        for v in img.iter_mut() {
            *v = rng.uniform(-0.1, 0.1);
        }
        for (t, &(dx, dy, freq)) in textures.iter().enumerate() {
            let present = rng.pick(2) == 1;
            let phase = rng.uniform_f64(0.0, std::f64::consts::TAU);
            if present {
                labels.set2(ni, t, 1.0);
                let half = size / 2;
                let x0 = rng.pick(size - half + 1);
                let y0 = rng.pick(size - half + 1);
                for y in y0..y0 + half {
                    for x in x0..x0 + half {
                        let arg = freq * (dx * x as f64 + dy * y as f64) + phase;
                        img[y * size + x] += 0.5 * arg.cos() as f32;
                    }
                }
            }
            let certain = rng.pick(10) != 0;
            mask.set2(ni, t, if certain { 1.0 } else { 0.0 });
        }
        for v in img.iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
    }
    Dataset {
        kind: DatasetKind::BlobsCls5,
        images,
        targets: labels,
        mask: Some(mask),
    }
}

pub fn generate(kind: DatasetKind, count: usize, size: usize, seed: u64) -> Dataset {
    match kind {
        DatasetKind::ShapesSeg => gen_shapes_seg(count, size, seed),
        DatasetKind::BlobsCls5 => gen_blobs_cls5(count, size, seed),
    }
}

const MAGIC: &[u8; 4] = b"NFDS";

fn write_section(out: &mut Vec<u8>, name: &str, t: &Tensor) {
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.push(t.shape().len() as u8);
    for &d in t.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Single-file container: magic, version, dataset kind, then named f32
/// tensor sections (count and shape in the header, raw little-endian data).
pub fn save(ds: &Dataset, path: &Path) -> Result<(), CliError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(1u8);
    let kind = ds.kind.name();
    out.push(kind.len() as u8);
    out.extend_from_slice(kind.as_bytes());
    let sections: u32 = 2 + ds.mask.is_some() as u32;
    out.extend_from_slice(&sections.to_le_bytes());
    write_section(&mut out, "images", &ds.images);
    write_section(&mut out, "targets", &ds.targets);
    if let Some(m) = &ds.mask {
        write_section(&mut out, "mask", m);
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CliError> {
        if self.at + n > self.buf.len() {
            return Err(CliError::Io("dataset file truncated".into()));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CliError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8, CliError> {
        Ok(self.take(1)?[0])
    }
}

pub fn load(path: &Path) -> Result<Dataset, CliError> {
    let buf = std::fs::read(path)?;
    let mut r = Reader { buf: &buf, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(CliError::Io("not a dataset container".into()));
    }
    if r.u8()? != 1 {
        return Err(CliError::Io("unsupported dataset version".into()));
    }
    let kind_len = r.u8()? as usize;
    let kind_name = String::from_utf8_lossy(r.take(kind_len)?).to_string();
    let kind = DatasetKind::parse(&kind_name)
        .ok_or_else(|| CliError::Io(format!("unknown dataset kind '{kind_name}'")))?;
    let sections = r.u32()?;
    let mut images = None;
    let mut targets = None;
    let mut mask = None;
    for _ in 0..sections {
        let name_len = r.u32()? as usize;
        let name = String::from_utf8_lossy(r.take(name_len)?).to_string();
        let ndim = r.u8()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let numel: usize = shape.iter().product();
        let raw = r.take(numel * 4)?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let t = Tensor::from_vec(&shape, data);
        match name.as_str() {
            "images" => images = Some(t),
            "targets" => targets = Some(t),
            "mask" => mask = Some(t),
            other => return Err(CliError::Io(format!("unknown section '{other}'"))),
        }
    }
    Ok(Dataset {
        kind,
        images: images.ok_or_else(|| CliError::Io("missing images section".into()))?,
        targets: targets.ok_or_else(|| CliError::Io("missing targets section".into()))?,
        mask,
    })
}
