use super::XmlNode;

pub(super) fn to_xml(node: &XmlNode) -> String {
    let mut out = String::new();
    write_node(node, &mut out);
    out
}

fn write_node(node: &XmlNode, out: &mut String) {
    out.push('<');
    out.push_str(node.name());
    for (name, value) in node.attributes() {
        out.push(' ');
        out.push_str(name);
        out.push_str("=\"");
        escape_into(value, true, out);
        out.push('"');
    }
    if node.value().is_empty() && node.children().is_empty() {
        out.push_str("/>");
        return;
    }
    out.push('>');
    escape_into(node.value(), false, out);
    for child in node.children() {
        write_node(child, out);
    }
    out.push_str("</");
    out.push_str(node.name());
    out.push('>');
}

fn escape_into(text: &str, attribute: bool, out: &mut String) {
    for c in text.chars() {
        match c {
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '&' => out.push_str("&amp;"),
            '"' if attribute => out.push_str("&quot;"),
            '\t' if attribute => out.push_str("&#9;"),
            '\n' if attribute => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            _ => out.push(c),
        }
    }
}
