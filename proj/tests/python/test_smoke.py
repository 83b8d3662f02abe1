def test_import():
    import forgerylab
