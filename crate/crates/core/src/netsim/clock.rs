use super::Micros;

/// What a charge paid for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChargeKind {
    SessionSetup,
    Command,
    Bytes,
    /// One full content-filter execution.
    FilterExecution,
    /// A cheap sub-filter (list lookup, DNS, greylist, counter).
    Stage,
}

impl ChargeKind {
    pub fn is_filter(self) -> bool {
        matches!(self, ChargeKind::FilterExecution | ChargeKind::Stage)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Charge {
    pub kind: ChargeKind,
    pub at: Micros,
    pub amount: Micros,
}

/// Monotone virtual clock. Time only moves through [`VirtualClock::charge`],
/// and every charge lands in the audit ledger.
#[derive(Clone, Debug, Default)]
pub struct VirtualClock {
    now: Micros,
    ledger: Vec<Charge>,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> Micros {
        self.now
    }

    pub fn charge(&mut self, kind: ChargeKind, amount: Micros) -> Micros {
        self.ledger.push(Charge {
            kind,
            at: self.now,
            amount,
        });
        self.now += amount;
        amount
    }

    pub fn ledger(&self) -> &[Charge] {
        &self.ledger
    }

    pub fn filter_total(&self) -> Micros {
        self.sum_where(|k| k.is_filter())
    }

    pub fn network_total(&self) -> Micros {
        self.sum_where(|k| !k.is_filter())
    }

    pub fn total_of(&self, kind: ChargeKind) -> Micros {
        self.sum_where(|k| k == kind)
    }

    /// True when the ledger sums to the clock reading.
    pub fn audit(&self) -> bool {
        self.ledger.iter().map(|c| c.amount).sum::<Micros>() == self.now
    }

    fn sum_where(&self, pred: impl Fn(ChargeKind) -> bool) -> Micros {
        self.ledger
            .iter()
            .filter(|c| pred(c.kind))
            .map(|c| c.amount)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charges_accumulate_and_audit() {
        let mut clock = VirtualClock::new();
        clock.charge(ChargeKind::SessionSetup, Micros(50_000));
        clock.charge(ChargeKind::FilterExecution, Micros(250_000));
        clock.charge(ChargeKind::Command, Micros::ZERO);
        assert_eq!(clock.now(), Micros(300_000));
        assert_eq!(clock.filter_total(), Micros(250_000));
        assert_eq!(clock.network_total(), Micros(50_000));
        assert_eq!(clock.ledger().len(), 3);
        assert_eq!(clock.ledger()[1].at, Micros(50_000));
        assert!(clock.audit());
    }
}
