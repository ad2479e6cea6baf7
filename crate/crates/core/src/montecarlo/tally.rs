//! Integer sufficient statistics of a run, mergeable in any order.

use super::TrialRecord;

/// Counts over trials. All fields are integer sums, so merging is exact,
/// associative and commutative.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tally {
    pub trials: u64,
    /// Clicks at the heralding port.
    pub heralds: u64,
    /// Heralds caused by impurity leakage.
    pub background_heralds: u64,
    /// Clicks at the orthogonal port.
    pub perp_clicks: u64,
    pub signal_clicks: u64,
    pub heralded_signal_clicks: u64,
    pub perp_signal_clicks: u64,
    /// Per reference-phase bin: heralds, Σ fringe counts, Σ counts².
    pub bin_heralds: Vec<u64>,
    pub bin_counts: Vec<u64>,
    pub bin_counts_sq: Vec<u128>,
}

impl Tally {
    pub fn new(n_bins: usize) -> Self {
        Self {
            bin_heralds: vec![0; n_bins],
            bin_counts: vec![0; n_bins],
            bin_counts_sq: vec![0; n_bins],
            ..Self::default()
        }
    }

    pub fn n_bins(&self) -> usize {
        self.bin_heralds.len()
    }

    /// Adds one trial. Records with a bin index beyond `n_bins` still count
    /// toward every total except the fringe.
    pub fn push(&mut self, r: &TrialRecord) {
        self.trials += 1;
        let signal = u64::from(r.signal_click);
        self.signal_clicks += signal;
        if r.ancilla_click {
            self.heralds += 1;
            self.background_heralds += u64::from(r.click_is_background);
            self.heralded_signal_clicks += signal;
            if let Some(k) = (r.reference_phase_bin < self.n_bins()).then_some(r.reference_phase_bin) {
                let c = u64::from(r.fringe_counts);
                self.bin_heralds[k] += 1;
                self.bin_counts[k] += c;
                self.bin_counts_sq[k] += u128::from(c) * u128::from(c);
            }
        }
        if r.perp_click {
            self.perp_clicks += 1;
            self.perp_signal_clicks += signal;
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        assert_eq!(self.n_bins(), other.n_bins(), "tallies use different bin counts");
        self.trials += other.trials;
        self.heralds += other.heralds;
        self.background_heralds += other.background_heralds;
        self.perp_clicks += other.perp_clicks;
        self.signal_clicks += other.signal_clicks;
        self.heralded_signal_clicks += other.heralded_signal_clicks;
        self.perp_signal_clicks += other.perp_signal_clicks;
        for k in 0..self.n_bins() {
            self.bin_heralds[k] += other.bin_heralds[k];
            self.bin_counts[k] += other.bin_counts[k];
            self.bin_counts_sq[k] += other.bin_counts_sq[k];
        }
    }

    pub fn from_records<'a>(n_bins: usize, records: impl IntoIterator<Item = &'a TrialRecord>) -> Self {
        let mut tally = Self::new(n_bins);
        for r in records {
            tally.push(r);
        }
        tally
    }
}
