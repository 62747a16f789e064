//! Refractive-index data for birefringent crystals.
//!
//! Coefficient sets live in a plain-text key-value file (see
//! `data/materials.txt`, embedded as the builtin table) so the physics data
//! stays out of code and alternative fits can be swapped in per run.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::float::Real;

/// Polarization of the wave whose index is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    Ordinary,
    Extraordinary,
}

impl Polarization {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::Ordinary => "ordinary",
            Polarization::Extraordinary => "extraordinary",
        }
    }
}

/// One Sellmeier expansion `n^2 = A + sum_i B_i L^2 / (L^2 - C_i)` with its
/// declared validity window (wavelengths in micrometres).
#[derive(Debug, Clone)]
pub struct SellmeierExpansion<T> {
    pub constant: T,
    pub terms: Vec<(T, T)>,
    pub valid_um: (T, T),
}

impl<T: Real> SellmeierExpansion<T> {
    /// Index at `wavelength_um`, or a range error outside the validity window.
    pub fn index(&self, wavelength_um: T, material: &str, pol: Polarization) -> Result<T> {
        let (lo, hi) = self.valid_um;
        if !(wavelength_um >= lo && wavelength_um <= hi) {
            return Err(Error::WavelengthRange {
                material: material.to_string(),
                polarization: pol.as_str(),
                wavelength_um: wavelength_um.to_f64().unwrap_or(f64::NAN),
                min_um: lo.to_f64().unwrap_or(f64::NAN),
                max_um: hi.to_f64().unwrap_or(f64::NAN),
            });
        }
        let l2 = wavelength_um * wavelength_um;
        let mut n2 = self.constant;
        for &(b, c) in &self.terms {
            n2 = n2 + b * l2 / (l2 - c);
        }
        Ok(n2.sqrt())
    }
}

/// Both principal indices of one uniaxial material.
#[derive(Debug, Clone)]
pub struct MaterialCoefficients<T> {
    pub id: String,
    pub ordinary: SellmeierExpansion<T>,
    pub extraordinary: SellmeierExpansion<T>,
}

impl<T: Real> MaterialCoefficients<T> {
    pub fn index(&self, pol: Polarization, wavelength_um: T) -> Result<T> {
        match pol {
            Polarization::Ordinary => self.ordinary.index(wavelength_um, &self.id, pol),
            Polarization::Extraordinary => self.extraordinary.index(wavelength_um, &self.id, pol),
        }
    }
}

/// Registry of materials, keyed by lower-cased id.
#[derive(Debug, Clone, Default)]
pub struct MaterialTable<T> {
    materials: BTreeMap<String, MaterialCoefficients<T>>,
}

const BUILTIN_MATERIALS: &str = include_str!("../data/materials.txt");

impl<T: Real> MaterialTable<T> {
    pub fn empty() -> Self {
        MaterialTable {
            materials: BTreeMap::new(),
        }
    }

    /// Table with the coefficient sets shipped in `data/materials.txt`.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_MATERIALS).expect("builtin material table parses")
    }

    pub fn get(&self, id: &str) -> Result<&MaterialCoefficients<T>> {
        self.materials
            .get(&id.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownMaterial(id.to_string()))
    }

    pub fn insert(&mut self, mat: MaterialCoefficients<T>) {
        self.materials.insert(mat.id.to_ascii_lowercase(), mat);
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.materials.values().map(|m| m.id.as_str())
    }

    /// Parse the key-value record format documented in `data/materials.txt`.
    pub fn parse(text: &str) -> Result<Self> {
        struct Partial<T> {
            material: Option<String>,
            polarization: Option<Polarization>,
            expansion: Option<SellmeierExpansion<T>>,
            line: usize,
        }

        let mut table = Self::empty();
        let mut halves: BTreeMap<String, BTreeMap<&'static str, SellmeierExpansion<T>>> =
            BTreeMap::new();

        let mut blocks: Vec<Vec<(usize, &str)>> = vec![Vec::new()];
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                if !blocks.last().unwrap().is_empty() {
                    blocks.push(Vec::new());
                }
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            blocks.last_mut().unwrap().push((idx + 1, line));
        }

        for block in blocks.into_iter().filter(|b| !b.is_empty()) {
            let mut partial = Partial::<T> {
                material: None,
                polarization: None,
                expansion: None,
                line: block[0].0,
            };
            let mut coefficients: Option<Vec<T>> = None;
            let mut valid: Option<(T, T)> = None;
            for (lineno, line) in block {
                let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
                    line: Some(lineno),
                    msg: format!("expected 'key = value', got '{line}'"),
                })?;
                let key = key.trim();
                let value = value.trim();
                match key {
                    "material" => partial.material = Some(value.to_string()),
                    "polarization" => {
                        partial.polarization = Some(match value {
                            "ordinary" => Polarization::Ordinary,
                            "extraordinary" => Polarization::Extraordinary,
                            other => {
                                return Err(Error::Format {
                                    line: Some(lineno),
                                    msg: format!("unknown polarization '{other}'"),
                                })
                            }
                        })
                    }
                    "coefficients" => {
                        coefficients = Some(parse_floats(value, lineno)?);
                    }
                    "valid_um" => {
                        let v = parse_floats::<T>(value, lineno)?;
                        if v.len() != 2 || v[0] >= v[1] {
                            return Err(Error::Format {
                                line: Some(lineno),
                                msg: "valid_um needs two ascending values".to_string(),
                            });
                        }
                        valid = Some((v[0], v[1]));
                    }
                    other => {
                        return Err(Error::Format {
                            line: Some(lineno),
                            msg: format!("unknown key '{other}'"),
                        })
                    }
                }
            }
            let coeffs = coefficients.ok_or_else(|| Error::Format {
                line: Some(partial.line),
                msg: "record missing 'coefficients'".to_string(),
            })?;
            if coeffs.len() < 3 || coeffs.len() % 2 == 0 {
                return Err(Error::Format {
                    line: Some(partial.line),
                    msg: "coefficients must be A followed by (B, C) pairs".to_string(),
                });
            }
            let valid_um = valid.ok_or_else(|| Error::Format {
                line: Some(partial.line),
                msg: "record missing 'valid_um'".to_string(),
            })?;
            partial.expansion = Some(SellmeierExpansion {
                constant: coeffs[0],
                terms: coeffs[1..].chunks(2).map(|c| (c[0], c[1])).collect(),
                valid_um,
            });

            let material = partial.material.ok_or_else(|| Error::Format {
                line: Some(partial.line),
                msg: "record missing 'material'".to_string(),
            })?;
            let pol = partial.polarization.ok_or_else(|| Error::Format {
                line: Some(partial.line),
                msg: "record missing 'polarization'".to_string(),
            })?;
            halves
                .entry(material.clone())
                .or_default()
                .insert(pol.as_str(), partial.expansion.take().unwrap());
        }

        for (id, mut pair) in halves {
            let (Some(o), Some(e)) = (pair.remove("ordinary"), pair.remove("extraordinary"))
            else {
                return Err(Error::Format {
                    line: None,
                    msg: format!("material '{id}' needs both ordinary and extraordinary records"),
                });
            };
            table.insert(MaterialCoefficients {
                id,
                ordinary: o,
                extraordinary: e,
            });
        }
        Ok(table)
    }

    /// Load a coefficient file from disk and merge it over the builtin table.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table = Self::builtin();
        for (_, mat) in Self::parse(&text)?.materials {
            table.insert(mat);
        }
        Ok(table)
    }
}

fn parse_floats<T: Real>(value: &str, lineno: usize) -> Result<Vec<T>> {
    value
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map(T::of)
                .map_err(|_| Error::Format {
                    line: Some(lineno),
                    msg: format!("not a number: '{tok}'"),
                })
        })
        .collect()
}

/// Principal refractive index lookup; the spec-level entry point.
pub fn sellmeier_index<T: Real>(
    table: &MaterialTable<T>,
    material_id: &str,
    polarization: Polarization,
    wavelength_um: T,
) -> Result<T> {
    table.get(material_id)?.index(polarization, wavelength_um)
}
