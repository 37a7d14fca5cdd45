# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twins of :mod:`starjet.coeffring._pykernels`.

Keys are handled as C ``long long`` when the packed width fits; otherwise the
calls defer to the pure-Python implementation.
"""

from starjet.coeffring import _pykernels


def mul_affine(dict a, dict b, int tshift, int tcap):
    if tshift + 16 > 62:
        return _pykernels.mul_affine(a, b, tshift, tcap)
    cdef long long limit = (<long long>(tcap + 1)) << tshift
    cdef long long ka, kb, k, room
    cdef Py_ssize_t j, nb
    cdef dict out = {}
    cdef list items_b = sorted(b.items())
    nb = len(items_b)
    cdef long long[::1] keys_b
    import array
    arr = array.array('q', [0]) * nb
    keys_b = arr
    cdef list coeffs_b = [None] * nb
    for j in range(nb):
        keys_b[j] = items_b[j][0]
        coeffs_b[j] = items_b[j][1]
    cdef object ca, v, prod
    for ka_obj, ca in a.items():
        ka = ka_obj
        room = limit - ka
        for j in range(nb):
            kb = keys_b[j]
            if kb >= room:
                break
            k = ka + kb
            prod = ca * coeffs_b[j]
            v = out.get(k)
            if v is None:
                out[k] = prod
            else:
                out[k] = v + prod
    return {kk: vv for kk, vv in out.items() if vv}


def mul_torus(dict a, dict b, int tshift, object zero_obj, int tcap):
    if tshift + 16 > 62:
        return _pykernels.mul_torus(a, b, tshift, zero_obj, tcap)
    cdef long long zero = zero_obj
    cdef long long wmask = ((<long long>1) << tshift) - 1
    cdef long long sbit = (<long long>1) << tshift
    cdef long long z2 = zero + zero
    cdef long long ka, kb, ha, hb, wa, wb, wp, wm, w, base, k
    cdef int sa, sb, ta, t
    cdef Py_ssize_t j, nb
    cdef dict out = {}
    cdef list items_b = list(b.items())
    nb = len(items_b)
    import array
    hb_arr = array.array('q', [0]) * nb
    wb_arr = array.array('q', [0]) * nb
    cdef long long[::1] hbs = hb_arr
    cdef long long[::1] wbs = wb_arr
    cdef list coeffs_b = [None] * nb
    for j in range(nb):
        kb = items_b[j][0]
        hbs[j] = kb >> tshift
        wbs[j] = kb & wmask
        coeffs_b[j] = items_b[j][1]
    cdef object ca, half_a, c, cm, v
    for ka_obj, ca in a.items():
        ka = ka_obj
        ha = ka >> tshift
        sa = ha & 1
        ta = ha >> 1
        wa = ka & wmask
        half_a = ca / 2
        for j in range(nb):
            hb = hbs[j]
            t = ta + (hb >> 1)
            if t > tcap:
                continue
            wb = wbs[j]
            c = half_a * coeffs_b[j]
            base = (<long long>(t << 1)) << tshift
            wp = wa + wb - zero
            wm = wa - wb + zero
            sb = hb & 1
            if sa == 0 and sb == 0:
                w = wm if wm >= zero else z2 - wm
                k = base | w
                v = out.get(k)
                out[k] = c if v is None else v + c
                w = wp if wp >= zero else z2 - wp
                k = base | w
                v = out.get(k)
                out[k] = c if v is None else v + c
            elif sa == 1 and sb == 1:
                w = wm if wm >= zero else z2 - wm
                k = base | w
                v = out.get(k)
                out[k] = c if v is None else v + c
                w = wp if wp >= zero else z2 - wp
                k = base | w
                v = out.get(k)
                out[k] = -c if v is None else v - c
            else:
                cm = c if sa == 1 else -c
                if wp != zero:
                    if wp < zero:
                        k = base | sbit | (z2 - wp)
                        v = out.get(k)
                        out[k] = -c if v is None else v - c
                    else:
                        k = base | sbit | wp
                        v = out.get(k)
                        out[k] = c if v is None else v + c
                if wm != zero:
                    if wm < zero:
                        k = base | sbit | (z2 - wm)
                        v = out.get(k)
                        out[k] = -cm if v is None else v - cm
                    else:
                        k = base | sbit | wm
                        v = out.get(k)
                        out[k] = cm if v is None else v + cm
    return {kk: vv for kk, vv in out.items() if vv}


def axpy(dict acc, dict src, object q):
    cdef object k, v, old
    for k, v in src.items():
        old = acc.get(k)
        if old is None:
            acc[k] = q * v
        else:
            acc[k] = old + q * v
    return acc


def clean(dict d):
    return {k: v for k, v in d.items() if v}
