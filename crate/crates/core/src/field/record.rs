use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Column order of the ground-record CSV.
pub const ESU_HEADER: [&str; 14] = [
    "esu_id",
    "date",
    "lat",
    "lon",
    "land_cover",
    "lai_app",
    "lai_dhp",
    "lai_lic",
    "b",
    "g",
    "r",
    "nir",
    "swir1",
    "swir2",
];

/// Band order of [`EsuRecord::reflectance`]: B, G, R, NIR, SWIR1, SWIR2.
pub const N_BANDS: usize = 6;

/// Highest LAI accepted on a non-vegetated record.
pub const NON_VEGETATED_MAX_LAI: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LandCover {
    Rice,
    BareSoil,
    Water,
    Road,
    Other,
}

impl LandCover {
    pub fn is_vegetated(self) -> bool {
        !matches!(
            self,
            LandCover::BareSoil | LandCover::Water | LandCover::Road
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LandCover::Rice => "rice",
            LandCover::BareSoil => "bare_soil",
            LandCover::Water => "water",
            LandCover::Road => "road",
            LandCover::Other => "other",
        }
    }
}

impl FromStr for LandCover {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rice" => Ok(LandCover::Rice),
            "bare_soil" => Ok(LandCover::BareSoil),
            "water" => Ok(LandCover::Water),
            "road" => Ok(LandCover::Road),
            "other" => Ok(LandCover::Other),
            other => Err(format!("unknown land cover '{other}'")),
        }
    }
}

/// Ground LAI instrument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instrument {
    /// Smartphone app.
    App,
    /// Digital hemispherical photography.
    Dhp,
    /// LI-COR LAI-2000 plant canopy analyzer.
    Lic,
}

impl Instrument {
    pub const ALL: [Instrument; 3] = [Instrument::App, Instrument::Dhp, Instrument::Lic];

    pub fn as_str(self) -> &'static str {
        match self {
            Instrument::App => "app",
            Instrument::Dhp => "dhp",
            Instrument::Lic => "lic",
        }
    }

    /// Dataset label used in reports, e.g. `LAI_APP`.
    pub fn label(self) -> String {
        format!("LAI_{}", self.as_str().to_ascii_uppercase())
    }
}

impl fmt::Display for Instrument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Instrument {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "app" => Ok(Instrument::App),
            "dhp" => Ok(Instrument::Dhp),
            "lic" | "licor" => Ok(Instrument::Lic),
            other => Err(format!(
                "unknown instrument '{other}' (expected app, dhp, lic)"
            )),
        }
    }
}

/// One elementary sampling unit: ground LAI per instrument and the matching
/// surface reflectance.
#[derive(Debug, Clone, PartialEq)]
pub struct EsuRecord {
    pub esu_id: String,
    pub date: NaiveDate,
    pub lat: f64,
    pub lon: f64,
    pub land_cover: LandCover,
    pub lai_app: Option<f64>,
    pub lai_dhp: Option<f64>,
    pub lai_lic: Option<f64>,
    pub reflectance: [f64; N_BANDS],
}

impl EsuRecord {
    /// Target LAI for `instrument`. Non-vegetated records without a reading
    /// count as LAI 0.
    pub fn lai(&self, instrument: Instrument) -> Option<f64> {
        let v = match instrument {
            Instrument::App => self.lai_app,
            Instrument::Dhp => self.lai_dhp,
            Instrument::Lic => self.lai_lic,
        };
        match v {
            Some(v) => Some(v),
            None if !self.land_cover.is_vegetated() => Some(0.0),
            None => None,
        }
    }

    /// Checks the record invariants, returning the first violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.esu_id.trim().is_empty() {
            return Err("empty esu_id".into());
        }
        if !(-90.0..=90.0).contains(&self.lat) || !(-180.0..=180.0).contains(&self.lon) {
            return Err(format!(
                "coordinates out of range ({}, {})",
                self.lat, self.lon
            ));
        }
        for (name, v) in ESU_HEADER[8..].iter().zip(&self.reflectance) {
            if !v.is_finite() || !(0.0..=1.0).contains(v) {
                return Err(format!("band out of range: {name}={v}"));
            }
        }
        let readings = [self.lai_app, self.lai_dhp, self.lai_lic];
        for v in readings.iter().flatten() {
            if !v.is_finite() || *v < 0.0 {
                return Err(format!("invalid LAI {v}"));
            }
            if !self.land_cover.is_vegetated() && *v > NON_VEGETATED_MAX_LAI {
                return Err(format!(
                    "LAI {v} above {NON_VEGETATED_MAX_LAI} on non-vegetated {}",
                    self.land_cover.as_str()
                ));
            }
        }
        if self.land_cover.is_vegetated() && readings.iter().all(Option::is_none) {
            return Err("no LAI reading on a vegetated record".into());
        }
        Ok(())
    }
}

/// A data row that parsed but violated a record invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct RowRejection {
    /// 1-based line number in the file (the header is line 1).
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct EsuLoad {
    pub records: Vec<EsuRecord>,
    pub rejected: Vec<RowRejection>,
}

/// Reads ground records. Unparseable cells abort the load; rows that parse
/// but violate an invariant are collected in [`EsuLoad::rejected`].
pub fn load_esu_csv(path: &Path) -> Result<EsuLoad> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::load(path, "open", format!("{other:?}")),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::load(path, "line 1", e.to_string()))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != ESU_HEADER {
        return Err(Error::load(
            path,
            "line 1",
            format!(
                "header mismatch: expected '{}', got '{}'",
                ESU_HEADER.join(","),
                got.join(",")
            ),
        ));
    }

    let mut out = EsuLoad::default();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::load(path, format!("line {line}"), e.to_string()))?;
        let cell_err = |col: usize, msg: String| {
            Error::load(
                path,
                format!("line {line}, column {}", ESU_HEADER[col]),
                msg,
            )
        };
        let num = |col: usize| -> Result<Option<f64>> {
            let s = &row[col];
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| cell_err(col, format!("not a number: '{s}'")))
        };
        let required = |col: usize| -> Result<f64> {
            num(col)?.ok_or_else(|| cell_err(col, "missing value".into()))
        };

        let date = NaiveDate::parse_from_str(&row[1], "%Y-%m-%d")
            .map_err(|_| cell_err(1, format!("not an ISO-8601 date: '{}'", &row[1])))?;
        let land_cover = row[4].parse::<LandCover>().map_err(|m| cell_err(4, m))?;
        let mut reflectance = [0.0; N_BANDS];
        let mut missing_band = None;
        for (k, slot) in reflectance.iter_mut().enumerate() {
            match num(8 + k)? {
                Some(v) => *slot = v,
                None => missing_band = Some(ESU_HEADER[8 + k]),
            }
        }
        let record = EsuRecord {
            esu_id: row[0].to_string(),
            date,
            lat: required(2)?,
            lon: required(3)?,
            land_cover,
            lai_app: num(5)?,
            lai_dhp: num(6)?,
            lai_lic: num(7)?,
            reflectance,
        };
        let verdict = match missing_band {
            Some(b) => Err(format!("missing band {b}")),
            None => record.check(),
        };
        match verdict {
            Ok(()) => out.records.push(record),
            Err(reason) => {
                log::warn!("{}: rejected line {line}: {reason}", path.display());
                out.rejected.push(RowRejection {
                    line,
                    reason: format!("{reason}, row {line}"),
                });
            }
        }
    }
    Ok(out)
}

/// Writes records in the CSV schema read by [`load_esu_csv`].
pub fn write_esu_csv(records: &[EsuRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::load(path, "open", format!("{other:?}")),
    })?;
    let io_err = |e: csv::Error| Error::load(path, "write", e.to_string());
    w.write_record(ESU_HEADER).map_err(io_err)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for r in records {
        let mut row = vec![
            r.esu_id.clone(),
            r.date.format("%Y-%m-%d").to_string(),
            format!("{:?}", r.lat),
            format!("{:?}", r.lon),
            r.land_cover.as_str().to_string(),
            opt(r.lai_app),
            opt(r.lai_dhp),
            opt(r.lai_lic),
        ];
        row.extend(r.reflectance.iter().map(|v| format!("{v:?}")));
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "esu_id,date,lat,lon,land_cover,lai_app,lai_dhp,lai_lic,b,g,r,nir,swir1,swir2\n";

    fn load(body: &str) -> Result<EsuLoad> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("esu.csv");
        std::fs::write(&p, format!("{HEADER}{body}")).unwrap();
        load_esu_csv(&p)
    }

    #[test]
    fn happy_path() {
        let l = load(
            "e1,2014-06-17,39.27,-0.31,rice,1.2,1.4,1.3,0.05,0.08,0.06,0.35,0.2,0.1\n\
             e2,2014-06-17,39.28,-0.30,rice,2.0,,,0.04,0.07,0.05,0.40,0.2,0.1\n\
             e3,2014-07-01,39.29,-0.32,rice,,3.1,2.9,0.03,0.06,0.04,0.45,0.2,0.1\n",
        )
        .unwrap();
        assert_eq!(l.records.len(), 3);
        assert!(l.rejected.is_empty());
        assert_eq!(l.records[1].lai_dhp, None);
        assert_eq!(
            l.records[2].date,
            NaiveDate::from_ymd_opt(2014, 7, 1).unwrap()
        );
    }

    #[test]
    fn out_of_range_band_is_rejected_with_row() {
        let l = load(
            "e1,2014-06-17,39.27,-0.31,rice,1.2,,,0.05,0.08,0.06,0.35,0.2,0.1\n\
             e2,2014-06-17,39.27,-0.31,rice,1.2,,,0.05,0.08,1.7,0.35,0.2,0.1\n",
        )
        .unwrap();
        assert_eq!(l.records.len(), 1);
        assert_eq!(l.rejected.len(), 1);
        assert_eq!(l.rejected[0].line, 3);
        assert!(l.rejected[0].reason.contains("band out of range"));
        assert!(l.rejected[0].reason.contains("row 3"));
    }

    #[test]
    fn water_without_lai_counts_as_zero() {
        let l = load("w1,2014-06-17,39.3,-0.3,water,,,,0.02,0.03,0.02,0.01,0.005,0.003\n").unwrap();
        assert_eq!(l.records.len(), 1);
        for i in Instrument::ALL {
            assert_eq!(l.records[0].lai(i), Some(0.0));
        }
    }

    #[test]
    fn invariant_violations() {
        let l = load(
            "r1,2014-06-17,39.3,-0.3,road,0.9,,,0.1,0.1,0.1,0.1,0.1,0.1\n\
             v1,2014-06-17,39.3,-0.3,rice,,,,0.1,0.1,0.1,0.1,0.1,0.1\n\
             v2,2014-06-17,39.3,-0.3,rice,-1,,,0.1,0.1,0.1,0.1,0.1,0.1\n\
             v3,2014-06-17,39.3,-0.3,rice,1,,,0.1,,0.1,0.1,0.1,0.1\n",
        )
        .unwrap();
        assert!(l.records.is_empty());
        assert_eq!(l.rejected.len(), 4);
    }

    #[test]
    fn unparseable_cells_and_headers_fail() {
        let e = load("e1,2014-06-17,39.3,-0.3,rice,abc,,,0.1,0.1,0.1,0.1,0.1,0.1\n").unwrap_err();
        assert!(e.to_string().contains("line 2, column lai_app"), "{e}");
        assert!(load("e1,17/06/2014,39.3,-0.3,rice,1,,,0.1,0.1,0.1,0.1,0.1,0.1\n").is_err());
        assert!(load("e1,2014-06-17,39.3,-0.3,forest,1,,,0.1,0.1,0.1,0.1,0.1,0.1\n").is_err());

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "id,date\n").unwrap();
        assert!(matches!(load_esu_csv(&p), Err(Error::Load { .. })));
        assert!(matches!(
            load_esu_csv(&dir.path().join("none.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn write_then_load() {
        let l = load(
            "e1,2014-06-17,39.27,-0.31,rice,1.2,1.4,,0.05,0.08,0.06,0.35,0.2,0.1\n\
             w1,2014-06-18,39.3,-0.3,water,,,,0.02,0.03,0.02,0.01,0.005,0.003\n",
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_esu_csv(&l.records, &p).unwrap();
        assert_eq!(load_esu_csv(&p).unwrap().records, l.records);
    }
}
