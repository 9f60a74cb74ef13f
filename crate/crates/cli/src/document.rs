//! Market and equilibrium files.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use unitdemand::mechanisms::discriminated_market;
use unitdemand::{
    AdAuctionConfig, AdvertiserSpec, Equilibrium, Error, Market, Matching, PaymentMode, PayoffVector, PriceMap,
    PriceVector, StandardParams, TwoSidedMarket, UtilitySpec,
};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// A market file. Buyer and good order in the file is the index order everywhere else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketDocument {
    pub schema_version: u32,
    pub buyers: Vec<String>,
    pub goods: Vec<String>,
    /// `utilities[i][j]` is buyer `i`'s curve for good `j`.
    pub utilities: Vec<Vec<UtilitySpec>>,
    /// Personalised price maps, buyer by good.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_maps: Option<Vec<Vec<PriceMap>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ad_auction: Option<AdAuctionBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_sided: Option<TwoSidedBlock>,
}

/// Buyers are advertisers and goods are slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdAuctionBlock {
    pub modes: Vec<PaymentMode>,
    /// Engine clickthrough estimates, advertiser by slot.
    pub engine_ctr: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard: Option<Vec<Option<Vec<StandardParams>>>>,
}

/// Goods are sellers; `seller_utilities[i][j]` is seller `j`'s curve evaluated at minus the transfer from `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoSidedBlock {
    pub seller_utilities: Vec<Vec<UtilitySpec>>,
}

fn spec_error(e: Error) -> CliError {
    match e {
        Error::InvalidSpec { buyer, good, source } => {
            CliError::Validation(format!("buyer {buyer}, good {good}: {source}"))
        }
        other => CliError::Validation(other.to_string()),
    }
}

impl MarketDocument {
    pub fn from_market(market: &Market) -> Self {
        MarketDocument {
            schema_version: SCHEMA_VERSION,
            buyers: market.buyers().to_vec(),
            goods: market.goods().to_vec(),
            utilities: market.utilities().to_vec(),
            price_maps: None,
            ad_auction: None,
            two_sided: None,
        }
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let doc: MarketDocument = serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let market = self.base_market()?;
        if let Some(maps) = &self.price_maps {
            self.check_shape(maps, "price_maps")?;
            for (i, row) in maps.iter().enumerate() {
                for (j, map) in row.iter().enumerate() {
                    map.validate().map_err(|e| {
                        CliError::Validation(format!(
                            "price map for buyer {}, good {}: {e}",
                            self.buyers[i], self.goods[j]
                        ))
                    })?;
                }
            }
            discriminated_market(&market, maps).map_err(spec_error)?;
        }
        if self.ad_auction.is_some() {
            self.ad_config()?;
        }
        if self.two_sided.is_some() {
            self.two_sided_market()?;
        }
        Ok(())
    }

    fn check_shape<T>(&self, rows: &[Vec<T>], what: &str) -> CliResult<()> {
        if rows.len() != self.buyers.len() || rows.iter().any(|r| r.len() != self.goods.len()) {
            return Err(CliError::Validation(format!("{what} must be buyers x goods")));
        }
        Ok(())
    }

    fn base_market(&self) -> CliResult<Market> {
        Market::new(self.buyers.clone(), self.goods.clone(), self.utilities.clone()).map_err(spec_error)
    }

    /// The market to solve: the curves composed with the price maps, if any.
    pub fn market(&self) -> CliResult<Market> {
        let market = self.base_market()?;
        match &self.price_maps {
            Some(maps) => discriminated_market(&market, maps).map_err(spec_error),
            None => Ok(market),
        }
    }

    pub fn ad_config(&self) -> CliResult<AdAuctionConfig> {
        let block = self
            .ad_auction
            .as_ref()
            .ok_or_else(|| CliError::Validation("document has no ad_auction block".into()))?;
        if block.modes.len() != self.buyers.len() {
            return Err(CliError::Validation(
                "ad_auction.modes needs one entry per advertiser".into(),
            ));
        }
        if let Some(standard) = &block.standard {
            if standard.len() != self.buyers.len() {
                return Err(CliError::Validation(
                    "ad_auction.standard needs one entry per advertiser".into(),
                ));
            }
        }
        let advertisers = (0..self.buyers.len())
            .map(|i| AdvertiserSpec {
                id: self.buyers[i].clone(),
                mode: block.modes[i],
                utilities: self.utilities[i].clone(),
                standard: block.standard.as_ref().and_then(|s| s[i].clone()),
            })
            .collect();
        let config = AdAuctionConfig {
            slots: self.goods.clone(),
            advertisers,
            engine_ctr: block.engine_ctr.clone(),
        };
        config.validate().map_err(spec_error)?;
        Ok(config)
    }

    pub fn two_sided_market(&self) -> CliResult<TwoSidedMarket> {
        let block = self
            .two_sided
            .as_ref()
            .ok_or_else(|| CliError::Validation("document has no two_sided block".into()))?;
        self.check_shape(&block.seller_utilities, "two_sided.seller_utilities")?;
        TwoSidedMarket::new(
            self.buyers.clone(),
            self.goods.clone(),
            self.utilities.clone(),
            block.seller_utilities.clone(),
        )
        .map_err(|e| match e {
            Error::InvalidSpec { buyer, good, source } => {
                CliError::Validation(format!("seller {good} facing buyer {buyer}: {source}"))
            }
            other => spec_error(other),
        })
    }
}

/// Reads and validates a market file.
pub fn load_market(path: impl AsRef<Path>) -> CliResult<MarketDocument> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    MarketDocument::parse(&text, path)
}

/// An equilibrium file: `prices` follow `goods`, `payoffs` and `matching` follow `buyers`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumDocument {
    pub side: String,
    pub buyers: Vec<String>,
    pub goods: Vec<String>,
    pub prices: Vec<f64>,
    pub payoffs: Vec<f64>,
    /// Good assigned to each buyer.
    pub matching: Vec<Option<String>>,
}

impl EquilibriumDocument {
    pub fn new(eq: &Equilibrium, side: &str) -> Self {
        let m = &eq.market;
        EquilibriumDocument {
            side: side.to_string(),
            buyers: m.buyers().to_vec(),
            goods: m.goods().to_vec(),
            prices: eq.prices.0.clone(),
            payoffs: eq.payoffs.0.clone(),
            matching: eq.matching.0.iter().map(|g| g.map(|j| m.goods()[j].clone())).collect(),
        }
    }

    /// Rebuilds the equilibrium on `market`, whose ids must match the file.
    pub fn to_equilibrium(&self, market: Arc<Market>) -> CliResult<Equilibrium> {
        if self.buyers != market.buyers() || self.goods != market.goods() {
            return Err(CliError::Validation("equilibrium ids do not match the market".into()));
        }
        if self.prices.len() != self.goods.len()
            || self.payoffs.len() != self.buyers.len()
            || self.matching.len() != self.buyers.len()
        {
            return Err(CliError::Validation("equilibrium vectors have the wrong length".into()));
        }
        let matching = self
            .matching
            .iter()
            .map(|g| match g {
                None => Ok(None),
                Some(id) => market
                    .good_index(id)
                    .map(Some)
                    .ok_or_else(|| CliError::Validation(format!("unknown good {id} in matching"))),
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Equilibrium::new(
            market,
            PriceVector(self.prices.clone()),
            PayoffVector(self.payoffs.clone()),
            Matching(matching),
        ))
    }
}

pub fn load_equilibrium(path: impl AsRef<Path>, market: Arc<Market>) -> CliResult<Equilibrium> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: EquilibriumDocument = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.to_equilibrium(market)
}
