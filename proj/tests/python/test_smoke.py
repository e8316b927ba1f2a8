"""End-to-end smoke test for the python bindings."""

import math
import os
import sys
import tempfile

import numpy as np

import resiam


def check(name, ok):
    print(f"{name}: {'ok' if ok else 'FAIL'}")
    if not ok:
        sys.exit(1)


def main():
    check("iou exact thirds", resiam.iou(resiam.Box(0, 0, 2, 2), resiam.Box(1, 0, 2, 2)) == 1.0 / 3.0)

    g = resiam.digit_glyph(3)
    check("glyph shape and range", g.shape == (28, 28) and 0.0 <= g.min() and g.max() <= 1.0)

    box = resiam.enclosing_box(resiam.Box(0, 0, 10, 10), 45.0)
    check("45-degree square inflation", abs(box.w - 10 * math.sqrt(2)) < 1e-9)

    cfg = resiam.SynthConfig()
    cfg.frames = 8
    cfg.canvas = 120
    cfg.sigma_t = 1.0
    cfg.sigma_r = 4.0
    cfg.seed = 42
    seq = resiam.generate_sequence(cfg, 0)
    frames = seq.frames
    check(
        "synthetic sequence",
        len(frames) == 8
        and frames[0].shape == (1, 120, 120)
        and len(seq.target) == 8
        and seq.target[0].angle_deg == 0.0,
    )

    net = resiam.desk_network(4, 7)
    check("desk network", net.Lambda == 4 and net.total_stride() == 4)
    feat = resiam.forward(net, frames[0][0, :35, :35])
    check("forward shape", feat.shape == (16, 4, 4))

    tcfg = resiam.TrackerConfig()
    tcfg.Lambda = 4
    states = resiam.track_sequence(frames, seq.target[0].box, net, tcfg)
    ious = [resiam.iou(s.box(), a.box) for s, a in zip(states, seq.target)]
    check("tracking stays on target", len(states) == 8 and sum(ious) / len(ious) > 0.2)

    curves = resiam.ope_curves([s.box() for s in states], [a.box for a in seq.target])
    check(
        "ope curves",
        len(curves.success) == 101
        and len(curves.precision) == 51
        and curves.auc == sum(curves.success) / 101.0,
    )

    check(
        "random baselines",
        resiam.random_baseline(math.pi / 4) == 0.25
        and resiam.random_baseline(math.pi / 8) == 0.125
        and resiam.random_baseline(math.pi / 16) == 0.0625,
    )

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "w.json")
        head = resiam.TrackerHead()
        head.gain = 0.25
        resiam.save_network(path, net, head)
        net2, head2 = resiam.load_network(path)
        same = np.allclose(
            resiam.forward(net2, frames[0][0, :35, :35]), feat, rtol=0.0, atol=0.0
        )
        check("weights round trip", same and head2.gain == 0.25)

        seq_dir = os.path.join(tmp, "seq000000")
        resiam.write_sequence(seq_dir, seq, cfg)
        stored = resiam.read_sequence(seq_dir)
        check(
            "sequence round trip",
            len(stored.frames) == 8
            and stored.groundtruth[3].box.w == seq.target[3].box.w,
        )

        tr = resiam.TrainConfig()
        tr.epochs = 1
        tr.steps_per_epoch = 2
        tr.batch_size = 1
        tr.seed = 3
        _, _, losses = resiam.train_on_dataset(tmp, 4, tr, resiam.SamplerConfig())
        check("training runs", len(losses) == 2 and all(math.isfinite(l) for l in losses))

    print("smoke: all ok")


if __name__ == "__main__":
    main()
