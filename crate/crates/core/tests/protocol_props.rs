#[path = "common/protocol_gen.rs"]
mod protocol_gen;

use patrol_core::protocol::*;
use proptest::prelude::*;
use protocol_gen::*;

fn round_trip(m: &Message) -> Result<(), TestCaseError> {
    let bytes = encode(m).unwrap();
    prop_assert!(bytes.len() <= MAX_FRAME);
    let (back, used) = decode(&bytes).unwrap();
    prop_assert_eq!(used, bytes.len());
    prop_assert_eq!(&back, m);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn telemetry_round_trips(m in telemetry()) { round_trip(&m)?; }

    #[test]
    fn video_round_trips(m in video()) { round_trip(&m)?; }

    #[test]
    fn alarm_round_trips(m in alarm()) { round_trip(&m)?; }

    #[test]
    fn command_round_trips(m in command()) { round_trip(&m)?; }

    #[test]
    fn hello_round_trips(m in hello()) { round_trip(&m)?; }

    #[test]
    fn bye_round_trips(m in bye()) { round_trip(&m)?; }

    #[test]
    fn ack_round_trips(m in ack()) { round_trip(&m)?; }

    #[test]
    fn truncation_is_always_reported(m in any_message(), cut in any::<prop::sample::Index>()) {
        let bytes = encode(&m).unwrap();
        let cut = cut.index(bytes.len());
        let is_truncated = matches!(decode(&bytes[..cut]), Err(DecodeError::Truncated { .. }));
        prop_assert!(is_truncated);
    }

    /// A corrupted frame costs at most itself: everything after it decodes.
    #[test]
    fn stream_resyncs_after_corruption(
        msgs in prop::collection::vec(any_message(), 1..8),
        victim in any::<prop::sample::Index>(),
        garbage in prop::collection::vec(any::<u8>(), 1..40),
        chunk in 1usize..64,
    ) {
        let victim = victim.index(msgs.len());
        let mut stream = Vec::new();
        for (i, m) in msgs.iter().enumerate() {
            let mut f = encode(m).unwrap();
            if i == victim {
                // keep the length, wreck version/tag/body
                let body_len = f.len() - 4;
                let mut payload = vec![2u8];
                payload.extend(garbage.iter().cycle().take(body_len - 1));
                f.truncate(4);
                f.extend(payload);
            }
            stream.extend(f);
        }
        let mut r = FrameReader::new();
        let mut out = Vec::new();
        for c in stream.chunks(chunk) {
            r.push(c);
            while let Some(m) = r.next_frame() {
                out.push(m);
            }
        }
        prop_assert_eq!(out.len(), msgs.len());
        for (i, (got, want)) in out.iter().zip(&msgs).enumerate() {
            if i == victim {
                prop_assert_eq!(got, &Err(DecodeError::UnknownVersion(2)));
            } else {
                prop_assert_eq!(got, &Ok(want.clone()));
            }
        }
    }

    #[test]
    fn mutated_frames_never_panic(m in any_message(), flips in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..6)) {
        let mut bytes = encode(&m).unwrap();
        for (i, b) in flips {
            let i = i.index(bytes.len());
            bytes[i] = b;
        }
        let _ = decode(&bytes);
        let mut r = FrameReader::new();
        r.push(&bytes);
        while r.next_frame().is_some() {}
    }
}

/// 10k random byte strings, some with plausible headers.
#[test]
fn random_bytes_never_panic() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut classified = [0usize; 5];
    for i in 0..10_000 {
        let len = rng.random_range(0..300);
        let mut bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        if i % 3 != 0 && bytes.len() >= 6 {
            let n = (bytes.len() - 4) as u32;
            bytes[..4].copy_from_slice(&n.to_be_bytes());
            if i % 3 == 1 {
                bytes[4] = 1;
                bytes[5] = rng.random_range(0..9);
            }
        }
        let slot = match decode(&bytes) {
            Ok(_) => continue,
            Err(DecodeError::Truncated { .. }) => 0,
            Err(DecodeError::Oversize(_)) => 1,
            Err(DecodeError::UnknownVersion(_)) => 2,
            Err(DecodeError::UnknownTag(_)) => 3,
            Err(DecodeError::Body { .. }) => 4,
        };
        classified[slot] += 1;
        let mut r = FrameReader::new();
        r.push(&bytes);
        while r.next_frame().is_some() {}
    }
    assert!(classified.iter().all(|&c| c > 0), "{classified:?}");
}
