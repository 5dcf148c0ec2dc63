use super::{ChargeKind, CostModel, Micros, NetError, VirtualClock, World};
use crate::message::EmailMessage;

/// One SMTP connection between two servers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmtpSession {
    pub from: String,
    pub to: String,
    pub opened_at: Micros,
    pub commands: u64,
    pub bytes: u64,
    open: bool,
}

impl SmtpSession {
    pub fn is_open(&self) -> bool {
        self.open
    }
}

/// Opens a session from `a` to `b` and charges the connection setup,
/// which covers the greeting and HELO exchange.
pub fn establish_session(
    world: &World,
    a: &str,
    b: &str,
    clock: &mut VirtualClock,
    cost: &CostModel,
) -> Result<SmtpSession, NetError> {
    if a == b {
        return Err(NetError::SelfSession(a.to_string()));
    }
    for name in [a, b] {
        if world.server(name).is_none() {
            return Err(NetError::UnknownServer(name.to_string()));
        }
    }
    let opened_at = clock.now();
    clock.charge(ChargeKind::SessionSetup, cost.session_setup);
    Ok(SmtpSession {
        from: a.to_string(),
        to: b.to_string(),
        opened_at,
        commands: 1,
        bytes: 0,
        open: true,
    })
}

/// MAIL FROM, one RCPT TO per recipient, DATA, then the encoded bytes.
pub fn transmit(
    msg: &EmailMessage,
    rcpt_count: u64,
    session: &mut SmtpSession,
    clock: &mut VirtualClock,
    cost: &CostModel,
) -> Result<Micros, NetError> {
    if !session.open {
        return Err(NetError::SessionClosed);
    }
    if rcpt_count == 0 {
        return Err(NetError::NoRecipients);
    }
    let commands = 2 + rcpt_count;
    let bytes = msg.size_bytes();
    let command_cost = clock.charge(ChargeKind::Command, cost.per_command * commands);
    let byte_cost = clock.charge(ChargeKind::Bytes, cost.per_byte * bytes);
    session.commands += commands;
    session.bytes += bytes;
    Ok(command_cost + byte_cost)
}

pub fn charge_filter(clock: &mut VirtualClock, cost: &CostModel, executions: u64) -> Micros {
    clock.charge(ChargeKind::FilterExecution, cost.filter_cost * executions)
}

/// Sends QUIT on an open session; closing twice costs nothing.
pub fn close_session(session: &mut SmtpSession, clock: &mut VirtualClock, cost: &CostModel) {
    if session.open {
        clock.charge(ChargeKind::Command, cost.per_command);
        session.commands += 1;
        session.open = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::{parse_address, IpAddress};
    use crate::netsim::Profile;

    fn message(body_len: usize, rcpts: usize) -> EmailMessage {
        let rcpt = (0..rcpts)
            .map(|i| parse_address(&format!("r{i}@b.example")).unwrap())
            .collect();
        EmailMessage::new(
            "m",
            IpAddress::new(10, 0, 0, 1),
            "a.example",
            parse_address("s@a.example").unwrap(),
            rcpt,
            "",
            "x".repeat(body_len),
            Micros::ZERO,
        )
        .unwrap()
    }

    fn cost(setup: u64, cmd: u64, byte: u64) -> CostModel {
        CostModel {
            session_setup: Micros(setup),
            per_command: Micros(cmd),
            per_byte: Micros(byte),
            ..CostModel::for_profile(Profile::Custom)
        }
    }

    #[test]
    fn establish_charges_setup() {
        let world = World::scenario_default();
        let mut clock = VirtualClock::new();
        let s = establish_session(&world, "A", "B", &mut clock, &cost(50_000, 0, 0)).unwrap();
        assert!(s.is_open());
        assert_eq!(clock.now(), Micros(50_000));
        establish_session(&world, "A", "C", &mut clock, &cost(50_000, 0, 0)).unwrap();
        assert_eq!(clock.now(), Micros(100_000));

        let mut free = VirtualClock::new();
        establish_session(&world, "A", "B", &mut free, &cost(0, 0, 0)).unwrap();
        assert_eq!(free.now(), Micros::ZERO);
    }

    #[test]
    fn establish_errors() {
        let world = World::scenario_default();
        let mut clock = VirtualClock::new();
        let c = cost(1, 1, 1);
        assert!(matches!(
            establish_session(&world, "A", "Z", &mut clock, &c),
            Err(NetError::UnknownServer(_))
        ));
        assert!(matches!(
            establish_session(&world, "A", "A", &mut clock, &c),
            Err(NetError::SelfSession(_))
        ));
        assert_eq!(clock.now(), Micros::ZERO);
    }

    #[test]
    fn transmit_arithmetic() {
        let world = World::scenario_default();
        let c = cost(0, 1_000, 1);
        let mut clock = VirtualClock::new();
        let mut s = establish_session(&world, "A", "B", &mut clock, &c).unwrap();

        // A message of exactly 1000 encoded bytes, one recipient: 3 commands + 1000 bytes.
        let skeleton = message(0, 1).size_bytes() as usize;
        let m = message(1000 - skeleton, 1);
        assert_eq!(m.size_bytes(), 1000);
        assert_eq!(transmit(&m, 1, &mut s, &mut clock, &c).unwrap(), Micros(4_000));
        assert_eq!(s.bytes, 1000);
        assert_eq!(s.commands, 4);

        let one = transmit(&m, 1, &mut s, &mut clock, &c).unwrap();
        let ten = transmit(&m, 10, &mut s, &mut clock, &c).unwrap();
        assert_eq!(ten.0 - one.0, 9 * 1_000);
    }

    #[test]
    fn transmit_zero_bytes_costs_commands_only() {
        let world = World::scenario_default();
        let c = cost(0, 7, 0);
        let mut clock = VirtualClock::new();
        let mut s = establish_session(&world, "A", "B", &mut clock, &c).unwrap();
        assert_eq!(transmit(&message(0, 1), 1, &mut s, &mut clock, &c).unwrap(), Micros(21));
    }

    #[test]
    fn closed_session_rejects_transmit_and_close_is_idempotent() {
        let world = World::scenario_default();
        let c = cost(10, 5, 1);
        let mut clock = VirtualClock::new();
        let mut s = establish_session(&world, "A", "B", &mut clock, &c).unwrap();
        close_session(&mut s, &mut clock, &c);
        assert_eq!(clock.now(), Micros(15));
        close_session(&mut s, &mut clock, &c);
        assert_eq!(clock.now(), Micros(15));
        let before = s.clone();
        assert_eq!(
            transmit(&message(3, 1), 1, &mut s, &mut clock, &c),
            Err(NetError::SessionClosed)
        );
        assert_eq!(s, before);
        assert!(clock.audit());
    }

    #[test]
    fn close_with_free_commands() {
        let world = World::scenario_default();
        let c = cost(0, 0, 0);
        let mut clock = VirtualClock::new();
        let mut s = establish_session(&world, "A", "B", &mut clock, &c).unwrap();
        close_session(&mut s, &mut clock, &c);
        assert!(!s.is_open());
        assert_eq!(clock.now(), Micros::ZERO);
    }

    #[test]
    fn charge_filter_profiles() {
        for (profile, expected) in [
            (Profile::Dspam, Micros::from_secs(250)),
            (Profile::Trec, Micros::from_secs(200)),
        ] {
            let mut clock = VirtualClock::new();
            let c = CostModel::for_profile(profile);
            assert_eq!(charge_filter(&mut clock, &c, 1000), expected);
            assert_eq!(charge_filter(&mut clock, &c, 0), Micros::ZERO);
            assert_eq!(clock.now(), expected);
        }
    }
}
