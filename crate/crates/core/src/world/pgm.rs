//! Binary PGM (P5) dumps: 0 = Occupied, 128 = Unknown, 255 = Free, with the
//! metric resolution carried in a `# resolution <meters>` header comment.

use std::io::{Read, Write};
use std::path::Path;

use super::{BeliefMap, GroundTruthMap, Knowledge, OccupancyGrid, Terrain};
use crate::error::{Error, Result};

pub const OCCUPIED_GRAY: u8 = 0;
pub const UNKNOWN_GRAY: u8 = 128;
pub const FREE_GRAY: u8 = 255;

/// Decoded 8-bit graymap.
#[derive(Clone, Debug, PartialEq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub pixels: Vec<u8>,
}

impl PgmImage {
    pub fn from_truth(map: &GroundTruthMap) -> Self {
        Self::from_grid(map, |t| match t {
            Terrain::Free => FREE_GRAY,
            Terrain::Occupied => OCCUPIED_GRAY,
        })
    }

    pub fn from_belief(map: &BeliefMap) -> Self {
        Self::from_grid(map, |k| match k {
            Knowledge::Free => FREE_GRAY,
            Knowledge::Occupied => OCCUPIED_GRAY,
            Knowledge::Unknown => UNKNOWN_GRAY,
        })
    }

    fn from_grid<C: Copy>(grid: &OccupancyGrid<C>, gray: impl Fn(C) -> u8) -> Self {
        Self {
            width: grid.width(),
            height: grid.height(),
            resolution: grid.resolution(),
            pixels: grid.cells().iter().map(|&c| gray(c)).collect(),
        }
    }

    /// Interprets the image as a ground-truth map; anything not Free is Occupied.
    pub fn to_truth(&self) -> Result<GroundTruthMap> {
        let cells = self
            .pixels
            .iter()
            .map(|&p| if p == FREE_GRAY { Terrain::Free } else { Terrain::Occupied })
            .collect();
        OccupancyGrid::from_cells(self.width, self.height, self.resolution, cells)
    }

    pub fn to_belief(&self) -> Result<BeliefMap> {
        let cells = self
            .pixels
            .iter()
            .map(|&p| match p {
                FREE_GRAY => Knowledge::Free,
                OCCUPIED_GRAY => Knowledge::Occupied,
                _ => Knowledge::Unknown,
            })
            .collect();
        OccupancyGrid::from_cells(self.width, self.height, self.resolution, cells)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!(
            "P5\n# resolution {}\n{} {}\n255\n",
            self.resolution, self.width, self.height
        )
        .into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut pos = 0;
        let mut resolution = None;
        let mut tokens = Vec::new();
        while tokens.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos >= bytes.len() {
                return Err("truncated header".into());
            }
            if bytes[pos] == b'#' {
                let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |e| pos + e);
                let comment = String::from_utf8_lossy(&bytes[pos + 1..end]);
                if let Some(v) = comment.trim().strip_prefix("resolution") {
                    resolution = Some(v.trim().parse::<f64>().map_err(|e| e.to_string())?);
                }
                pos = end;
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if tokens[0] != "P5" {
            return Err(format!("expected P5 magic, got {:?}", tokens[0]));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
        let (width, height, maxval) = (parse(&tokens[1])?, parse(&tokens[2])?, parse(&tokens[3])?);
        if maxval != 255 {
            return Err(format!("unsupported maxval {maxval}"));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let pixels = bytes.get(pos..pos + width * height).ok_or("truncated raster")?.to_vec();
        Ok(Self {
            width,
            height,
            resolution: resolution.ok_or("missing resolution comment")?,
            pixels,
        })
    }
}

pub fn write_pgm(path: &Path, image: &PgmImage) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&image.encode())?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<PgmImage> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    PgmImage::decode(&bytes).map_err(|reason| Error::Format {
        what: "PGM image",
        path: path.to_path_buf(),
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Cell;

    #[test]
    fn header_layout_is_exact() {
        let mut belief = BeliefMap::filled(3, 2, 0.4, Knowledge::Unknown);
        belief.set(Cell::new(0, 0), Knowledge::Free);
        belief.set(Cell::new(2, 1), Knowledge::Occupied);
        let bytes = PgmImage::from_belief(&belief).encode();
        let header = b"P5\n# resolution 0.4\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[255, 128, 128, 128, 128, 0]);
        let back = PgmImage::decode(&bytes).unwrap().to_belief().unwrap();
        assert_eq!(back, belief);
    }

    #[test]
    fn rejects_wrong_magic() {
        assert!(PgmImage::decode(b"P2\n# resolution 1\n1 1\n255\n\x00").is_err());
        assert!(PgmImage::decode(b"P5\n1 1\n255\n\x00").is_err());
    }
}
