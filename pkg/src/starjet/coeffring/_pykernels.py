"""Pure-Python sparse kernels for packed-key term dictionaries.

Keys are non-negative ints produced by :mod:`starjet.coeffring.base`;
values are exact rationals.  Results may transiently contain zeros, callers
strip them with :func:`clean`.
"""


def mul_affine(a, b, tshift, tcap):
    limit = (tcap + 1) << tshift
    items_b = sorted(b.items())
    out = {}
    get = out.get
    for ka, ca in a.items():
        room = limit - ka
        for kb, cb in items_b:
            if kb >= room:
                break
            k = ka + kb
            v = get(k)
            out[k] = ca * cb if v is None else v + ca * cb
    return clean(out)


def mul_torus(a, b, tshift, zero, tcap):
    wmask = (1 << tshift) - 1
    sbit = 1 << tshift
    z2 = zero + zero
    out = {}
    get = out.get
    items_b = [(kb >> tshift, kb & wmask, cb) for kb, cb in b.items()]
    for ka, ca in a.items():
        ha = ka >> tshift
        sa = ha & 1
        ta = ha >> 1
        wa = ka & wmask
        half_a = ca / 2
        for hb, wb, cb in items_b:
            t = ta + (hb >> 1)
            if t > tcap:
                continue
            c = half_a * cb
            base = (t << 1) << tshift
            wp = wa + wb - zero
            wm = wa - wb + zero
            sb = hb & 1
            if not sa and not sb:
                # cos cos -> cos(a-b) + cos(a+b)
                w = wm if wm >= zero else z2 - wm
                k = base | w
                v = get(k)
                out[k] = c if v is None else v + c
                w = wp if wp >= zero else z2 - wp
                k = base | w
                v = get(k)
                out[k] = c if v is None else v + c
            elif sa and sb:
                # sin sin -> cos(a-b) - cos(a+b)
                w = wm if wm >= zero else z2 - wm
                k = base | w
                v = get(k)
                out[k] = c if v is None else v + c
                w = wp if wp >= zero else z2 - wp
                k = base | w
                v = get(k)
                out[k] = -c if v is None else v - c
            else:
                # sin cos -> sin(a+b) + sin(a-b); cos sin -> sin(a+b) - sin(a-b)
                cm = c if sa else -c
                for w, cc in ((wp, c), (wm, cm)):
                    if w == zero:
                        continue
                    if w < zero:
                        w = z2 - w
                        cc = -cc
                    k = base | sbit | w
                    v = get(k)
                    out[k] = cc if v is None else v + cc
    return clean(out)


def axpy(acc, src, q):
    """``acc += q * src`` in place."""
    get = acc.get
    for k, v in src.items():
        old = get(k)
        acc[k] = q * v if old is None else old + q * v
    return acc


def clean(d):
    return {k: v for k, v in d.items() if v}
