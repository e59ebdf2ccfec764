GLOBAL_CFG = "{'debug': False}"


def load_setting():
    return eval(GLOBAL_CFG)


def safe_sum():
    # constant expression, nothing external reaches it
    return eval("1+1")
